//! Lasso selection over region scatter points.

use serde::{Deserialize, Serialize};

use scaleglyph::stats::ScatterTable;

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionQuery {
    /// Scatter column on the horizontal axis.
    pub x: String,
    /// Scatter column on the vertical axis.
    pub y: String,
    /// Polygon vertices in data coordinates.
    pub polygon: Vec<[f64; 2]>,
    /// Restrict the selection to regions of one band.
    #[serde(default)]
    pub band: Option<u32>,
}

/// Twice the signed area of `poly`.
pub fn signed_area2(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum()
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Even-odd ray casting; points on an edge count as inside.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Winding number of `poly` around `p`.
pub fn winding_number(p: [f64; 2], poly: &[[f64; 2]]) -> i32 {
    let n = poly.len();
    let mut w = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                w += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            w -= 1;
        }
    }
    w
}

/// Region ids whose `(x, y)` scatter point falls in the polygon, ascending.
/// `region_band` maps region id to band and is needed only when the query
/// restricts the band.
pub fn lasso_select(query: &SelectionQuery, table: &ScatterTable, region_band: &[u32]) -> Result<Vec<u32>> {
    if query.polygon.len() < 3 {
        return Err(ServiceError::BadRequest("lasso polygon needs at least 3 vertices".into()));
    }
    if query.polygon.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ServiceError::BadRequest("lasso polygon has non-finite vertices".into()));
    }
    let column = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| ServiceError::BadRequest(format!("unknown scatter column `{name}`")))
    };
    let xs = column(&query.x)?;
    let ys = column(&query.y)?;
    if signed_area2(&query.polygon) == 0.0 {
        return Ok(Vec::new());
    }
    let mut ids: Vec<u32> = table
        .region_ids
        .iter()
        .enumerate()
        .filter(|&(_, &id)| query.band.is_none_or(|b| region_band.get(id as usize) == Some(&b)))
        .filter(|&(row, _)| point_in_polygon([xs[row], ys[row]], &query.polygon))
        .map(|(_, &id)| id)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(points: &[[f64; 2]]) -> ScatterTable {
        ScatterTable {
            region_ids: (0..points.len() as u32).collect(),
            columns: vec!["a".into(), "b".into()],
            values: vec![
                points.iter().map(|p| p[0]).collect(),
                points.iter().map(|p| p[1]).collect(),
            ],
            degenerate: vec![false, false],
        }
    }

    fn query(polygon: Vec<[f64; 2]>) -> SelectionQuery {
        SelectionQuery {
            x: "a".into(),
            y: "b".into(),
            polygon,
            band: None,
        }
    }

    #[test]
    fn unit_square() {
        let t = table(&[[0.5, 0.5], [2.0, 2.0]]);
        let q = query(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(lasso_select(&q, &t, &[]).unwrap(), vec![0]);
    }

    #[test]
    fn boundary_points_are_inside() {
        let t = table(&[[1.0, 0.5], [0.0, 0.0], [0.5, 1.0]]);
        let q = query(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(lasso_select(&q, &t, &[]).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn degenerate_polygon_selects_nothing() {
        let t = table(&[[0.5, 0.5], [1.0, 1.0]]);
        let q = query(vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(lasso_select(&q, &t, &[]).unwrap().is_empty());
        assert!(lasso_select(&query(vec![[0.0, 0.0], [1.0, 1.0]]), &t, &[]).is_err());
    }

    #[test]
    fn band_filter_and_unknown_column() {
        let t = table(&[[0.5, 0.5], [0.6, 0.6]]);
        let mut q = query(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        q.band = Some(1);
        assert_eq!(lasso_select(&q, &t, &[0, 1]).unwrap(), vec![1]);
        q.x = "zz".into();
        assert!(matches!(lasso_select(&q, &t, &[0, 1]), Err(ServiceError::BadRequest(_))));
    }

    #[test]
    fn concave_polygon_matches_winding() {
        let poly = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [2.0, 1.0], [0.0, 4.0]];
        for (p, inside) in [([2.0, 0.5], true), ([2.0, 2.0], false), ([0.5, 3.0], true)] {
            assert_eq!(point_in_polygon(p, &poly), inside);
            assert_eq!(winding_number(p, &poly) != 0, inside);
        }
    }
}
