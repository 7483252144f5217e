//! Hotspot statistics and linear regression.

use std::collections::BTreeMap;

use crate::error::FitError;
use crate::hex::{CellId, HexGrid};

/// |z| at and beyond which a cell is classified hot or cold (~95%).
pub const DEFAULT_Z_THRESHOLD: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HotspotClass {
    Hot,
    Cold,
    Neutral,
}

impl HotspotClass {
    pub fn as_str(self) -> &'static str {
        match self {
            HotspotClass::Hot => "hot",
            HotspotClass::Cold => "cold",
            HotspotClass::Neutral => "neutral",
        }
    }
}

/// Getis-Ord Gi* result for one cell. `z` is `None` when the statistic is
/// undefined (zero global variance, or a neighborhood spanning every cell).
#[derive(Debug, Clone, PartialEq)]
pub struct GiStar {
    pub cell: CellId,
    pub z: Option<f64>,
    pub classification: HotspotClass,
}

/// Getis-Ord Gi* with binary weights over a caller-supplied neighborhood
/// (which must include the cell itself). For each cell i:
///
/// ```text
/// z_i = (sum_j w_ij x_j - mean * W_i)
///       / (S * sqrt((n * sum_j w_ij^2 - W_i^2) / (n - 1)))
/// ```
///
/// with the population standard deviation S and W_i the neighbor count.
/// Neighbors not present in `values` carry no weight. All-equal inputs
/// give undefined z everywhere, classified neutral.
pub fn getis_ord_gi_star(
    values: &[(CellId, f64)],
    neighbors_incl_self: impl Fn(&CellId) -> Vec<CellId>,
    z_threshold: f64,
) -> Vec<GiStar> {
    let n = values.len();
    let by_cell: BTreeMap<CellId, f64> = values.iter().copied().collect();
    if n == 0 {
        return Vec::new();
    }
    let nf = n as f64;
    let mean = values.iter().map(|(_, v)| v).sum::<f64>() / nf;
    let var = values.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / nf;
    let sd = var.sqrt();
    values
        .iter()
        .map(|(cell, _)| {
            let mut w_sum = 0.0;
            let mut wx_sum = 0.0;
            for nb in neighbors_incl_self(cell) {
                if let Some(&x) = by_cell.get(&nb) {
                    w_sum += 1.0;
                    wx_sum += x;
                }
            }
            // Binary weights: sum of squared weights equals W_i.
            let denom_inner = (nf * w_sum - w_sum * w_sum) / (nf - 1.0).max(1.0);
            let denom = sd * denom_inner.max(0.0).sqrt();
            let z = (sd > 0.0 && denom > 0.0).then(|| (wx_sum - mean * w_sum) / denom);
            let classification = match z {
                Some(z) if z >= z_threshold => HotspotClass::Hot,
                Some(z) if z <= -z_threshold => HotspotClass::Cold,
                _ => HotspotClass::Neutral,
            };
            GiStar {
                cell: *cell,
                z,
                classification,
            }
        })
        .collect()
}

/// Gi* over hex contiguity: the six adjacent cells plus self, restricted
/// to cells present in `values`.
pub fn gi_star_hex(values: &[(CellId, f64)], grid: &HexGrid, z_threshold: f64) -> Vec<GiStar> {
    getis_ord_gi_star(
        values,
        |cell| {
            let mut nb = grid.neighbors(cell);
            nb.push(*cell);
            nb
        },
        z_threshold,
    )
}

/// Cells in the top and bottom `percent` by z among defined z-scores
/// (mirrors ranked hot/cold-spot selection). Ties broken by cell id.
pub fn rank_extremes(scores: &[GiStar], percent: f64) -> (Vec<CellId>, Vec<CellId>) {
    let mut defined: Vec<(&CellId, f64)> = scores
        .iter()
        .filter_map(|g| g.z.map(|z| (&g.cell, z)))
        .collect();
    defined.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    let k = ((defined.len() as f64) * percent / 100.0).floor() as usize;
    let top = defined[..k].iter().map(|(c, _)| **c).collect();
    let bottom = defined[defined.len() - k..]
        .iter()
        .map(|(c, _)| **c)
        .collect();
    (top, bottom)
}

/// Ordinary least squares fit of y on x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; 0 when y has zero variance.
    pub pearson_r: f64,
    pub n: usize,
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit, FitError> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(FitError::TooFewPoints { needed: 2, got: n.min(y.len()) });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::ZeroXVariance);
    }
    let slope = sxy / sxx;
    let pearson_r = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Ok(OlsFit {
        slope,
        intercept: my - slope * mx,
        pearson_r,
        n,
    })
}
