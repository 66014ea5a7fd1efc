//! Plain-text weight files ("WEIGHTS v1").
//!
//! Layout:
//!
//! ```text
//! WEIGHTS v1 <block-count>
//! <name> shape <rows> <cols>
//! <value>                        (rows·cols lines, row-major)
//! ...next block...
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! finite `f64` exactly. Blocks appear in the fixed parameter order of each
//! network, with the network's name as a prefix (`nav.head.w`, ...), and the
//! loader insists on exactly that order so a file is either a complete
//! match for the requested networks or an error.

use super::net::RecurrentNet;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "WEIGHTS v1";

/// Serializes the named networks into one file.
pub fn save_weights(path: &Path, nets: &[(&str, &RecurrentNet)]) -> Result<()> {
    let blocks: usize = nets.iter().map(|(_, n)| n.params().len()).sum();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {blocks}");
    for (net_name, net) in nets {
        for (param_name, mat) in net.param_names().iter().zip(net.params()) {
            let _ = writeln!(out, "{net_name}.{param_name} shape {} {}", mat.rows, mat.cols);
            for v in &mat.data {
                let _ = writeln!(out, "{v:.16e}");
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a file produced by [`save_weights`] into the given networks, which
/// must have matching architectures (names, order and shapes).
pub fn load_weights(path: &Path, nets: &mut [(&str, &mut RecurrentNet)]) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::format(format!("cannot read weights {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(format!("{}: empty weights file", path.display())))?;
    let expected_blocks: usize = nets.iter().map(|(_, n)| n.params().len()).sum();
    let mut hp = header.split_whitespace();
    if hp.next() != Some("WEIGHTS") || hp.next() != Some("v1") {
        return Err(Error::format(format!(
            "{}: bad header {header:?}, expected {MAGIC:?}",
            path.display()
        )));
    }
    let count: usize = hp
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(format!("{}: missing block count", path.display())))?;
    if count != expected_blocks {
        return Err(Error::format(format!(
            "{}: file holds {count} parameter blocks, these networks need {expected_blocks}",
            path.display()
        )));
    }

    for (net_name, net) in nets.iter_mut() {
        let names = net.param_names();
        for (param_name, mat) in names.iter().zip(net.params_mut()) {
            let want = format!("{net_name}.{param_name}");
            let (ln, block_header) = lines
                .next()
                .ok_or_else(|| Error::format(format!("{}: missing block {want}", path.display())))?;
            let mut parts = block_header.split_whitespace();
            let got_name = parts.next().unwrap_or("");
            let shape_kw = parts.next();
            let rows: Option<usize> = parts.next().and_then(|s| s.parse().ok());
            let cols: Option<usize> = parts.next().and_then(|s| s.parse().ok());
            if got_name != want || shape_kw != Some("shape") {
                return Err(Error::format(format!(
                    "{} line {}: expected block {want}, found {block_header:?}",
                    path.display(),
                    ln + 1
                )));
            }
            if rows != Some(mat.rows) || cols != Some(mat.cols) {
                return Err(Error::format(format!(
                    "{} line {}: block {want} has shape {rows:?}×{cols:?}, expected {}×{}",
                    path.display(),
                    ln + 1,
                    mat.rows,
                    mat.cols
                )));
            }
            for k in 0..mat.rows * mat.cols {
                let (vln, vline) = lines.next().ok_or_else(|| {
                    Error::format(format!(
                        "{}: block {want} truncated at value {k}",
                        path.display()
                    ))
                })?;
                let v: f64 = vline.trim().parse().map_err(|_| {
                    Error::format(format!(
                        "{} line {}: bad float {vline:?}",
                        path.display(),
                        vln + 1
                    ))
                })?;
                mat.data[k] = v;
            }
        }
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::format(format!(
            "{} line {}: trailing content {extra:?}",
            path.display(),
            ln + 1
        )));
    }
    Ok(())
}
