//! Cosine self-similarity with threshold enhancement.

use super::chroma::ChromaSequence;
use super::StructureError;

/// Values below `threshold` are replaced by `penalty`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmParams {
    pub threshold: f64,
    pub penalty: f64,
}

impl Default for SsmParams {
    fn default() -> Self {
        Self { threshold: 0.2, penalty: -2.0 }
    }
}

/// Square symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Ssm {
    n: usize,
    values: Vec<f64>,
}

impl Ssm {
    /// Builds from rows; panics unless square.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "SSM rows must form a square matrix");
        Self { n, values: rows.into_iter().flatten().collect() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

fn cosine(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn compute_ssm(chroma: &ChromaSequence, params: &SsmParams) -> Result<Ssm, StructureError> {
    let n = chroma.len();
    if n < 2 {
        return Err(StructureError::TooFewFrames(n));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = cosine(&chroma.frames[i], &chroma.frames[j]);
            if s < params.threshold {
                s = params.penalty;
            }
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    Ok(Ssm { n, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(frames: Vec<[f64; 12]>) -> ChromaSequence {
        ChromaSequence { frames, frame_rate: 1.0 }
    }

    fn unit(pc: usize) -> [f64; 12] {
        let mut f = [0.0; 12];
        f[pc] = 1.0;
        f
    }

    #[test]
    fn identical_and_orthogonal_frames() {
        let m = compute_ssm(&seq(vec![unit(0), unit(0), unit(4)]), &SsmParams::default()).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 2), -2.0);
        assert_eq!(m.get(2, 0), -2.0);
    }

    #[test]
    fn sixty_degrees_is_kept_above_threshold() {
        let a = unit(0);
        let mut b = [0.0; 12];
        b[0] = 0.5;
        b[1] = 3f64.sqrt() / 2.0;
        let m = compute_ssm(&seq(vec![a, b]), &SsmParams::default()).unwrap();
        assert!((m.get(0, 1) - 0.5).abs() < 1e-12);
        let strict = SsmParams { threshold: 0.6, penalty: -2.0 };
        assert_eq!(compute_ssm(&seq(vec![a, b]), &strict).unwrap().get(0, 1), -2.0);
    }

    #[test]
    fn zero_frames_have_zero_similarity() {
        let params = SsmParams { threshold: -1.0, penalty: -2.0 };
        let m = compute_ssm(&seq(vec![unit(0), [0.0; 12]]), &params).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn needs_two_frames() {
        assert_eq!(compute_ssm(&seq(vec![unit(0)]), &SsmParams::default()), Err(StructureError::TooFewFrames(1)));
    }
}
