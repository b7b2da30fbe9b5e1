//! Compact `name:args` forms for potentials and regions on the command line.

use fbl_core::grid::Region;
use fbl_core::schrodinger::Potential;

use crate::error::{FblError, Result};

fn numbers(args: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values = args
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| FblError::config(format!("{what}: `{s}` is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(FblError::config(format!(
            "{what} takes {expected} numbers, got {}",
            values.len()
        )));
    }
    Ok(values)
}

/// `harmonic`, `power:q` or `separable:qx,qy`.
pub fn parse_potential(text: &str) -> Result<Potential> {
    let (name, args) = text.split_once(':').unwrap_or((text, ""));
    match name.trim() {
        "harmonic" => Ok(Potential::Harmonic),
        "power" => Ok(Potential::Power {
            q: numbers(args, 1, "power")?[0],
        }),
        "separable" => {
            let q = numbers(args, 2, "separable")?;
            Ok(Potential::Separable {
                vx: Box::new(Potential::Power { q: q[0] }),
                vy: Box::new(Potential::Power { q: q[1] }),
            })
        }
        other => Err(FblError::config(format!("unknown potential `{other}`"))),
    }
}

/// `interval:a,b`, `rectangle:x0,y0,x1,y1`, `disk:cx,cy,r` or
/// `annulus:cx,cy,inner,outer`.
pub fn parse_region(text: &str) -> Result<Region> {
    let (name, args) = text
        .split_once(':')
        .ok_or_else(|| FblError::config(format!("region `{text}` needs arguments")))?;
    let region = match name.trim() {
        "interval" => {
            let v = numbers(args, 2, "interval")?;
            Region::interval(v[0], v[1])
        }
        "rectangle" => {
            let v = numbers(args, 4, "rectangle")?;
            Region::rectangle([v[0], v[1]], [v[2], v[3]])
        }
        "disk" => {
            let v = numbers(args, 3, "disk")?;
            Region::disk([v[0], v[1]], v[2])
        }
        "annulus" => {
            let v = numbers(args, 4, "annulus")?;
            Region::annulus([v[0], v[1]], v[2], v[3])
        }
        other => return Err(FblError::config(format!("unknown region `{other}`"))),
    };
    region.map_err(|e| FblError::config(e.to_string()))
}
