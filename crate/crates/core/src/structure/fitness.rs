//! Segment fitness from an optimal path family.
//!
//! A path family for segment `[s, e]` (width `M`) is a set of alignment
//! paths through the SSM columns `s..=e`. Each path runs from the first to
//! the last segment column using steps (1,1), (2,1) and (1,2) in
//! (row, column) order, and paths occupy disjoint, increasing row ranges.
//! The dynamic program keeps an extra "elevator" column 0 that lets the
//! family skip rows between paths.

use super::ssm::Ssm;
use super::StructureError;

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessDetail {
    /// Total SSM value collected by the optimal family.
    pub score: f64,
    /// Number of cells on the family's paths.
    pub path_length: usize,
    /// Rows covered by the family (sum of each path's row span).
    pub coverage: usize,
    /// Row span `(first, last)` of each path, in order.
    pub paths: Vec<(usize, usize)>,
    pub score_norm: f64,
    pub coverage_norm: f64,
    pub fitness: f64,
}

/// Fitness in `[0, 1]` of the frames `start..=end`.
pub fn segment_fitness(ssm: &Ssm, start: usize, end: usize) -> Result<f64, StructureError> {
    segment_fitness_detail(ssm, start, end).map(|d| d.fitness)
}

pub fn segment_fitness_detail(ssm: &Ssm, start: usize, end: usize) -> Result<FitnessDetail, StructureError> {
    let n = ssm.len();
    if start > end || end >= n {
        return Err(StructureError::BadSegment { start, end, n });
    }
    let m_len = end - start + 1;
    let w = m_len + 1;
    // row r of the tables is SSM row r - 1; row 0 is the empty prefix
    let mut d = vec![f64::NEG_INFINITY; (n + 1) * w];
    let mut choice = vec![0u8; (n + 1) * w];
    d[0] = 0.0;
    for r in 1..=n {
        let row = &ssm.row(r - 1)[start..=end];
        let (prev, cur) = ((r - 1) * w, r * w);
        let (idle, finished) = (d[prev], d[prev + m_len]);
        if finished > idle {
            d[cur] = finished;
            choice[cur] = 1;
        } else {
            d[cur] = idle;
        }
        d[cur + 1] = d[cur] + row[0];
        for m in 2..=m_len {
            let mut best = d[prev + m - 1];
            let mut c = 0;
            if r >= 2 && d[(r - 2) * w + m - 1] > best {
                best = d[(r - 2) * w + m - 1];
                c = 1;
            }
            if m >= 3 && d[prev + m - 2] > best {
                best = d[prev + m - 2];
                c = 2;
            }
            d[cur + m] = best + row[m - 1];
            choice[cur + m] = c;
        }
    }

    let last = n * w;
    let (score, mut m) = if d[last + m_len] > d[last] { (d[last + m_len], m_len) } else { (d[last], 0) };
    let mut r = n;
    let mut paths = Vec::new();
    let mut path_length = 0;
    let mut path_end = 0;
    while r > 0 {
        if m == 0 {
            if choice[r * w] == 1 {
                m = m_len;
            }
            r -= 1;
            continue;
        }
        if m == m_len {
            path_end = r - 1;
        }
        path_length += 1;
        if m == 1 {
            paths.push((r - 1, path_end));
            m = 0;
            continue;
        }
        match choice[r * w + m] {
            0 => (r, m) = (r - 1, m - 1),
            1 => (r, m) = (r - 2, m - 1),
            _ => (r, m) = (r - 1, m - 2),
        }
    }
    paths.reverse();
    let coverage = paths.iter().map(|(a, b)| b - a + 1).sum::<usize>();

    let score_norm = if path_length == 0 { 0.0 } else { (score - m_len as f64) / path_length as f64 };
    let coverage_norm = (coverage as f64 - m_len as f64) / n as f64;
    let fitness = if score_norm <= 0.0 || coverage_norm <= 0.0 {
        0.0
    } else {
        2.0 * score_norm * coverage_norm / (score_norm + coverage_norm)
    };
    Ok(FitnessDetail { score, path_length, coverage, paths, score_norm, coverage_norm, fitness })
}
