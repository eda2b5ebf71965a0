//! Plot-ready CSV and JSON outputs. Floats carry 17 significant digits so a
//! written table parses back to the same bits; every file is written to a
//! temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cumulant::CumulantCurve;
use crate::error::{Result, TrawlError};
use crate::scaling::ScalingCurve;
use crate::simulator::Ensemble;

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `path` atomically: the content goes to a temporary file in the
/// same directory, which is then renamed over `path`.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.as_file().sync_all()?;
    // temporary files are created owner-only; outputs get the usual mode
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| TrawlError::Io(e.error))?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(header)?;
        for row in rows {
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// `replication,k,t,X,Xstar`, one row per replication and grid point.
pub fn write_ensemble_csv(path: &Path, ens: &Ensemble) -> Result<()> {
    let cols = ens.cols();
    let rows = (0..ens.replications()).flat_map(move |r| {
        let (x, xs) = (ens.x_row(r), ens.xstar_row(r));
        (0..cols).map(move |k| {
            vec![
                r.to_string(),
                k.to_string(),
                fmt_f64(ens.time(k)),
                fmt_f64(x[k]),
                fmt_f64(xs[k]),
            ]
        })
    });
    write_csv(path, &["replication", "k", "t", "X", "Xstar"], rows)
}

/// `m,t,I1,I2,I3,I4,kappa` for each curve.
pub fn write_cumulant_csv(path: &Path, curves: &[CumulantCurve]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        (0..c.t_grid.len()).map(move |i| {
            let p = &c.components[i];
            vec![
                c.m.to_string(),
                fmt_f64(c.t_grid[i]),
                fmt_f64(p.i1),
                fmt_f64(p.i2),
                fmt_f64(p.i3),
                fmt_f64(p.i4),
                fmt_f64(c.values[i]),
            ]
        })
    });
    write_csv(path, &["m", "t", "I1", "I2", "I3", "I4", "kappa"], rows)
}

/// Fitted slope per cumulant order: `m,slope,stderr,r2,t_min,t_max`.
pub fn write_cumulant_fits_csv(path: &Path, fits: &[(u32, Option<crate::scaling::TauFit>)]) -> Result<()> {
    let rows = fits.iter().map(|(m, fit)| match fit {
        Some(f) => vec![
            m.to_string(),
            fmt_f64(f.tau_hat),
            fmt_f64(f.stderr),
            fmt_f64(f.r2),
            fmt_f64(f.t_min),
            fmt_f64(f.t_max),
        ],
        None => {
            let mut row = vec![m.to_string()];
            row.extend(std::iter::repeat_n(String::new(), 5));
            row
        }
    });
    write_csv(path, &["m", "slope", "stderr", "r2", "t_min", "t_max"], rows)
}

/// `q,tau_hat,stderr,r2,source` for each curve.
pub fn write_scaling_csv(path: &Path, curves: &[ScalingCurve]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        c.fits.iter().map(move |f| {
            vec![
                fmt_f64(f.q),
                fmt_f64(f.tau_hat),
                fmt_f64(f.stderr),
                fmt_f64(f.r2),
                c.source.as_str().to_string(),
            ]
        })
    });
    write_csv(path, &["q", "tau_hat", "stderr", "r2", "source"], rows)
}
