//! Fitness scape plots, structureness indicators and plot export.

use std::io::{self, Write};

use rayon::prelude::*;

use super::fitness::segment_fitness;
use super::ssm::Ssm;
use super::StructureError;

/// Plots larger than this are computed on a stride-2 grid by default.
pub const FULL_GRID_LIMIT: usize = 400;

pub fn default_stride(n: usize) -> usize {
    if n > FULL_GRID_LIMIT {
        2
    } else {
        1
    }
}

/// `values[d - 1][c]` is the fitness of the segment of duration `d` frames
/// centred on frame `c` (start `c - (d - 1) / 2`). Cells whose segment does
/// not fit, and cells skipped by a stride, are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScapePlot {
    pub values: Vec<Vec<f64>>,
    pub stride: usize,
}

impl ScapePlot {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, duration: usize, center: usize) -> f64 {
        self.values[duration - 1][center]
    }

    /// Start frame of the segment behind a cell.
    pub fn segment_start(duration: usize, center: usize) -> Option<usize> {
        center.checked_sub((duration - 1) / 2)
    }
}

/// Full-grid plot for `N <= 400`, stride 2 above.
pub fn scape_plot(ssm: &Ssm) -> Result<ScapePlot, StructureError> {
    scape_plot_with(ssm, default_stride(ssm.len()))
}

/// Plot evaluated for durations `1, 1 + stride, ...` and segment starts
/// `0, stride, ...`.
pub fn scape_plot_with(ssm: &Ssm, stride: usize) -> Result<ScapePlot, StructureError> {
    let n = ssm.len();
    if n < 2 {
        return Err(StructureError::TooFewFrames(n));
    }
    if stride == 0 {
        return Err(StructureError::BadStride);
    }
    let cells: Vec<(usize, usize)> =
        (1..=n).step_by(stride).flat_map(|d| (0..=n - d).step_by(stride).map(move |s| (d, s))).collect();
    let fitness: Vec<f64> =
        cells.par_iter().map(|&(d, s)| segment_fitness(ssm, s, s + d - 1).expect("cells are in bounds")).collect();
    let mut values = vec![vec![0.0; n]; n];
    for (&(d, s), f) in cells.iter().zip(fitness) {
        values[d - 1][s + (d - 1) / 2] = f;
    }
    Ok(ScapePlot { values, stride })
}

/// Largest fitness among durations `lower..=upper` (upper defaults to, and
/// is capped at, the plot size).
pub fn structureness_indicator(plot: &ScapePlot, lower: usize, upper: Option<usize>) -> Result<f64, StructureError> {
    let n = plot.len();
    let upper_given = upper.unwrap_or(n);
    if lower == 0 || lower > upper_given || lower > n {
        return Err(StructureError::BadBand { lower, upper: upper_given, n });
    }
    let upper = upper_given.min(n);
    Ok(plot.values[lower - 1..upper].iter().flatten().copied().fold(0.0, f64::max))
}

/// One line per duration (1 first), values with 6 decimals.
pub fn write_text_matrix<W: Write>(mut out: W, plot: &ScapePlot) -> io::Result<()> {
    for row in &plot.values {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()
}

/// Binary graymap, width = centres, height = durations with the longest
/// duration on top; grey level `round(255 s)`.
pub fn write_pgm<W: Write>(out: W, plot: &ScapePlot) -> io::Result<()> {
    write_pgm_annotated(out, plot, &[])
}

/// [`write_pgm`] with `#` comment lines in the header.
pub fn write_pgm_annotated<W: Write>(mut out: W, plot: &ScapePlot, comments: &[String]) -> io::Result<()> {
    let n = plot.len();
    writeln!(out, "P5")?;
    for c in comments {
        writeln!(out, "# {}", c.replace(['\n', '\r'], " "))?;
    }
    write!(out, "{n} {n}\n255\n")?;
    let mut bytes = Vec::with_capacity(n * n);
    for row in plot.values.iter().rev() {
        bytes.extend(row.iter().map(|v| (255.0 * v.clamp(0.0, 1.0)).round() as u8));
    }
    out.write_all(&bytes)?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot_with(n: usize, cells: &[(usize, usize, f64)]) -> ScapePlot {
        let mut values = vec![vec![0.0; n]; n];
        for &(d, c, v) in cells {
            values[d - 1][c] = v;
        }
        ScapePlot { values, stride: 1 }
    }

    #[test]
    fn all_penalty_ssm_gives_zero_plot() {
        let ssm = Ssm::from_rows(vec![vec![-2.0; 6]; 6]);
        let p = scape_plot(&ssm).unwrap();
        assert!(p.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn repeated_half_peaks_near_half_length() {
        let k = 5;
        let n = 2 * k;
        let ssm =
            Ssm::from_rows((0..n).map(|i| (0..n).map(|j| if i % k == j % k { 1.0 } else { -2.0 }).collect()).collect());
        let p = scape_plot(&ssm).unwrap();
        let (mut best, mut at) = (0.0, 0);
        for d in 1..=n {
            for c in 0..n {
                if p.get(d, c) > best {
                    (best, at) = (p.get(d, c), d);
                }
            }
        }
        assert_eq!(at, k);
        assert!(p.values.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn indicator_bands() {
        let p = plot_with(20, &[(10, 9, 0.7)]);
        assert_eq!(structureness_indicator(&p, 8, Some(15)).unwrap(), 0.7);
        assert_eq!(structureness_indicator(&p, 3, Some(8)).unwrap(), 0.0);
        assert_eq!(structureness_indicator(&p, 15, None).unwrap(), 0.0);
        assert_eq!(structureness_indicator(&p, 1, None).unwrap(), 0.7);
        assert_eq!(structureness_indicator(&p, 10, Some(10)).unwrap(), 0.7);
        // an upper bound past the plot is capped
        assert_eq!(structureness_indicator(&p, 8, Some(100)).unwrap(), 0.7);
        assert!(structureness_indicator(&p, 9, Some(8)).is_err());
        assert!(structureness_indicator(&p, 21, None).is_err());
        assert!(structureness_indicator(&p, 0, None).is_err());
    }

    #[test]
    fn stride_skips_cells() {
        let ssm = Ssm::from_rows(vec![vec![1.0; 5]; 5]);
        let p = scape_plot_with(&ssm, 2).unwrap();
        assert_eq!(p.stride, 2);
        assert!(p.values[1].iter().all(|&v| v == 0.0));
        assert!(scape_plot_with(&ssm, 0).is_err());
    }

    #[test]
    fn exports() {
        let p = plot_with(2, &[(1, 0, 0.5), (1, 1, 1.0)]);
        let mut text = Vec::new();
        write_text_matrix(&mut text, &p).unwrap();
        assert_eq!(String::from_utf8(text).unwrap(), "0.500000 1.000000\n0.000000 0.000000\n");
        let mut pgm = Vec::new();
        write_pgm(&mut pgm, &p).unwrap();
        assert_eq!(&pgm[..11], b"P5\n2 2\n255\n");
        assert_eq!(&pgm[11..], &[0, 0, 128, 255]);
        let mut annotated = Vec::new();
        write_pgm_annotated(&mut annotated, &p, &["tau=0.2".to_string()]).unwrap();
        assert_eq!(&annotated[..21], b"P5\n# tau=0.2\n2 2\n255\n");
    }
}
