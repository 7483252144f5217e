//! Building-type classification.
//!
//! Land-use labels from a curated building register take priority; when
//! absent, raw OSM `building=*` values are translated into the same
//! categories through a configurable lookup table. The built-in table
//! covers the OSM label variants observed in UK data, including a few
//! malformed multi-value strings that occur verbatim in the wild.

use std::collections::HashMap;

/// Category assigned when neither a land-use label nor an OSM label exists.
pub const UNLABELED: &str = "Unlabeled";
/// Category for OSM labels that carry no usable type information.
pub const UNCLASSIFIED: &str = "Unclassified";

/// Ordered category rows; the first row containing an OSM label wins
/// (e.g. 'ruins' appears under both Recreation and Vacant and is resolved
/// to the earlier row).
const DEFAULT_ROWS: &[(&str, &[&str])] = &[
    (
        "Residential",
        &[
            "apartments",
            "flats",
            "house",
            "terrace",
            "detached",
            "semidetached_house",
            "dormitory",
            "hall_of_residence",
            "cottage",
            "bungalow",
            "terrace_house",
            "council_flats",
            "farm_auxiliary",
            "farm",
            "houseboat",
            "stable",
            "cabin",
            "terraced_house",
            "Nursery,_School",
            "yes;dormitory",
        ],
    ),
    (
        "Mixed Use",
        &[
            "yes, office, shop, r",
            "apartments;residenti",
            "apartments;yes",
            "commercial;detached",
            "retail;yes",
        ],
    ),
    (
        "Industry and Business",
        &[
            "office",
            "data_center",
            "commercial",
            "warehouse",
            "industrial",
            "light_industrial",
            "factory",
            "manufacture",
            "office;yes",
            "telecommunication",
            "business",
            "artists_studio",
        ],
    ),
    (
        "Community Services",
        &[
            "church",
            "university",
            "school",
            "government",
            "public",
            "hospital",
            "college",
            "Community_Building",
            "kindergarten",
            "memorial",
            "student_residence",
            "gatehouse",
            "cafe",
            "greenhouse",
            "monument",
            "pavilion",
            "palace",
            "mosque",
            "synagogue",
            "police_station",
            "religious",
            "clock_tower",
            "village_hall",
            "conservatory",
            "chapel",
        ],
    ),
    ("Retail", &["retail", "pub", "kiosk", "stall", "bar", "shop"]),
    (
        "Transport",
        &[
            "train_station",
            "transportation",
            "ship",
            "boat",
            "bridge",
            "railway_arch",
            "railway",
            "bus",
            "viaduct",
            "tunnel_mouth",
            "tunnel_entrance",
            "bus_garage",
        ],
    ),
    (
        "Recreation and Leisure",
        &[
            "civic",
            "hall",
            "ruins",
            "stadium",
            "recreational",
            "gallery",
            "theatre",
            "cinema",
            "museum",
            "sports_centre",
            "sports_hall",
            "swimming_pool",
            "parking",
            "yes;public;sports_ce",
        ],
    ),
    (
        "Utilities and Infrastructure",
        &[
            "service",
            "construction",
            "roof",
            "vent_shaft",
            "air_shaft",
            "ventilation_shaft",
            "electricity",
            "substation",
            "gasometer",
            "air_vent",
            "tunnel_shaft",
            "water",
        ],
    ),
    (
        "Vacant and Derelict",
        &["vacant", "disused_station", "abandoned", "ruins"],
    ),
    ("Defence", &["guardhouse", "bunker", "barracks"]),
    ("Unclassified", &["None", "yes", "no", "multiple", "part"]),
];

/// OSM-label -> category lookup.
#[derive(Debug, Clone)]
pub struct TypeMap {
    by_osm_label: HashMap<String, String>,
}

impl Default for TypeMap {
    fn default() -> Self {
        TypeMap::from_rows(
            DEFAULT_ROWS
                .iter()
                .map(|(cat, labels)| (cat.to_string(), labels.iter().map(|s| s.to_string()).collect())),
        )
    }
}

impl TypeMap {
    /// Builds a map from (category, labels) rows; earlier rows win on
    /// duplicate labels.
    pub fn from_rows(rows: impl IntoIterator<Item = (String, Vec<String>)>) -> Self {
        let mut by_osm_label = HashMap::new();
        for (category, labels) in rows {
            for label in labels {
                by_osm_label.entry(label).or_insert_with(|| category.clone());
            }
        }
        TypeMap { by_osm_label }
    }

    pub fn lookup_osm(&self, osm_label: &str) -> Option<&str> {
        self.by_osm_label.get(osm_label).map(String::as_str)
    }
}

/// Resolves a building's type label. The curated land-use label wins when
/// present; otherwise the OSM label is translated through the table
/// (unknown nonempty labels fall into `Unclassified`); with neither source
/// the building is `Unlabeled`.
pub fn map_building_type(
    ccrp_label: Option<&str>,
    osm_label: Option<&str>,
    map: &TypeMap,
) -> String {
    if let Some(ccrp) = ccrp_label {
        if !ccrp.is_empty() {
            return ccrp.to_string();
        }
    }
    match osm_label {
        Some(osm) if !osm.is_empty() => map
            .lookup_osm(osm)
            .unwrap_or(UNCLASSIFIED)
            .to_string(),
        _ => UNLABELED.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccrp_label_wins() {
        let map = TypeMap::default();
        assert_eq!(
            map_building_type(Some("Residential"), Some("office"), &map),
            "Residential"
        );
    }

    #[test]
    fn osm_label_translated() {
        let map = TypeMap::default();
        assert_eq!(
            map_building_type(None, Some("apartments"), &map),
            "Residential"
        );
        assert_eq!(
            map_building_type(None, Some("warehouse"), &map),
            "Industry and Business"
        );
    }

    #[test]
    fn missing_both_is_unlabeled() {
        let map = TypeMap::default();
        assert_eq!(map_building_type(None, None, &map), UNLABELED);
    }

    #[test]
    fn bare_yes_is_unclassified() {
        let map = TypeMap::default();
        assert_eq!(map_building_type(None, Some("yes"), &map), UNCLASSIFIED);
        assert_eq!(
            map_building_type(None, Some("something_new"), &map),
            UNCLASSIFIED
        );
    }

    #[test]
    fn duplicate_label_resolves_to_first_row() {
        let map = TypeMap::default();
        assert_eq!(
            map_building_type(None, Some("ruins"), &map),
            "Recreation and Leisure"
        );
    }
}
