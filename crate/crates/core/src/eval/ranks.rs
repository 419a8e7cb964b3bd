//! Whether a metric ranks target inferences the same way whatever
//! explanation is shown.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// True when every column induces the same ranking of rows.
    pub independent: bool,
    /// Per column, row indices from highest to lowest score; ties keep
    /// row order.
    pub rankings: Vec<Vec<usize>>,
    /// Spearman correlation between column pairs; `None` where a column
    /// is constant.
    pub correlation: Vec<Vec<Option<f64>>>,
}

/// Average ranks, 1-based, with tied values sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// `table[row][col]`: rows are target inferences, columns explanations.
pub fn rank_order_independence(table: &[Vec<f64>]) -> Result<RankReport> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument(
            "rank table must be complete with at least two rows and columns".into(),
        ));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "rank table entries must be finite".into(),
        ));
    }
    let columns: Vec<Vec<f64>> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).collect())
        .collect();
    let rankings: Vec<Vec<usize>> = columns
        .iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..rows).collect();
            order.sort_by(|&a, &b| col[b].total_cmp(&col[a]));
            order
        })
        .collect();
    let independent = rankings.windows(2).all(|w| w[0] == w[1]);
    let correlation = columns
        .iter()
        .map(|a| columns.iter().map(|b| spearman(a, b)).collect())
        .collect();
    Ok(RankReport {
        independent,
        rankings,
        correlation,
    })
}
