//! Number formatting and CSV files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qphase_core::PhaseWaveFunction;

/// Writes into one run directory with one float format.
#[derive(Debug, Clone)]
pub struct Output {
    dir: PathBuf,
    precision: Option<usize>,
}

impl Output {
    pub fn create(dir: &Path, precision: Option<usize>) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            precision,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn num(&self, x: f64) -> String {
        format_float(x, self.precision)
    }

    pub fn csv(
        &self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> io::Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()
    }

    /// Float-only table.
    pub fn table(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
        self.csv(
            name,
            header,
            rows.iter()
                .map(|r| r.iter().map(|&x| self.num(x)).collect()),
        )
    }

    /// `fields_t<k>.csv`: one row per node, q outer.
    pub fn fields(&self, k: usize, psi: &PhaseWaveFunction) -> io::Result<()> {
        let g = psi.grid();
        let v = psi.values();
        let rows = (0..g.n_q()).flat_map(|i| {
            (0..g.n_p()).map(move |j| {
                let z = v[[i, j]];
                [g.q_at(i), g.p_at(j), z.re, z.im, z.norm_sqr()]
                    .map(|x| self.num(x))
                    .to_vec()
            })
        });
        self.csv(
            &format!("fields_t{k}.csv"),
            &["q", "p", "re_psi", "im_psi", "density"],
            rows,
        )
    }

    /// `marginal_q_t<k>.csv`.
    pub fn marginal(&self, k: usize, psi: &PhaseWaveFunction) -> io::Result<()> {
        let q = psi.grid().q.nodes();
        let rows: Vec<Vec<f64>> = q
            .iter()
            .zip(psi.marginal_q())
            .map(|(&q, r)| vec![q, r])
            .collect();
        self.table(&format!("marginal_q_t{k}.csv"), &["q", "rho_q"], &rows)
    }

    pub fn text(&self, name: &str, body: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), body)
    }
}

/// Shortest representation that parses back to the same `f64`, or `precision` digits
/// after the point in scientific notation.
pub fn format_float(x: f64, precision: Option<usize>) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    match precision {
        Some(p) => format!("{x:.p$e}"),
        None => ryu::Buffer::new().format_finite(x).to_string(),
    }
}
