//! `OCCGRID 1` text format.
//!
//! ```text
//! OCCGRID 1
//! res 0.2
//! origin 0 0 0
//! dims 4 3 2
//! data
//! 6F2O4U
//! ...
//! ```
//!
//! After `data` there is one line per x-slab. Each line run-length encodes
//! the slab's `ny * nz` states in storage order (y major, z minor) as
//! `<count><F|O|U>` runs. Floats use the shortest round-trip notation, so
//! writing a parsed file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use super::{LogOddsParams, OccupancyGrid, VoxelState};
use crate::error::{Error, Result};
use crate::textio::{read_text, write_text};
use crate::Vec3;

pub fn grid_to_text(g: &OccupancyGrid) -> String {
    let [nx, ny, nz] = g.dims();
    let o = g.origin();
    let mut out = String::new();
    let _ = writeln!(out, "OCCGRID 1");
    let _ = writeln!(out, "res {}", g.resolution());
    let _ = writeln!(out, "origin {} {} {}", o.x, o.y, o.z);
    let _ = writeln!(out, "dims {nx} {ny} {nz}");
    out.push_str("data\n");
    let slab = ny * nz;
    for x in 0..nx {
        let mut run: Option<(VoxelState, usize)> = None;
        for i in x * slab..(x + 1) * slab {
            let s = g.state_at(i);
            run = match run {
                Some((prev, n)) if prev == s => Some((prev, n + 1)),
                Some((prev, n)) => {
                    let _ = write!(out, "{n}{}", prev.code());
                    Some((s, 1))
                }
                None => Some((s, 1)),
            };
        }
        if let Some((s, n)) = run {
            let _ = write!(out, "{n}{}", s.code());
        }
        out.push('\n');
    }
    out
}

fn header_value<'a>(line: Option<&'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = line.ok_or_else(|| Error::Format(format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Format(format!("expected `{key}`, got `{line}`")));
    }
    Ok(parts.collect())
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad number `{s}`")))
}

pub fn grid_from_text(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("OCCGRID 1") {
        return Err(Error::Format("missing `OCCGRID 1` header".into()));
    }
    let res = header_value(lines.next(), "res")?;
    let origin = header_value(lines.next(), "origin")?;
    let dims = header_value(lines.next(), "dims")?;
    if res.len() != 1 || origin.len() != 3 || dims.len() != 3 {
        return Err(Error::Format("malformed grid header".into()));
    }
    if lines.next().map(str::trim) != Some("data") {
        return Err(Error::Format("missing `data` line".into()));
    }
    let origin = Vec3::new(parse_num(origin[0])?, parse_num(origin[1])?, parse_num(origin[2])?);
    let dims = [parse_num(dims[0])?, parse_num(dims[1])?, parse_num(dims[2])?];
    let mut g = OccupancyGrid::new(origin, parse_num(res[0])?, dims, LogOddsParams::default())?;
    let slab = dims[1] * dims[2];
    for x in 0..dims[0] {
        let line = lines.next().ok_or_else(|| Error::Format(format!("missing slab {x}")))?;
        let mut filled = 0;
        let mut count = 0usize;
        for c in line.trim().chars() {
            if let Some(d) = c.to_digit(10) {
                count = count
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(d as usize))
                    .ok_or_else(|| Error::Format("run length overflow".into()))?;
                continue;
            }
            let s = VoxelState::from_code(c).ok_or_else(|| Error::Format(format!("bad state `{c}` in slab {x}")))?;
            if count == 0 || filled + count > slab {
                return Err(Error::Format(format!("bad run in slab {x}")));
            }
            for i in 0..count {
                g.set_state(x * slab + filled + i, s);
            }
            filled += count;
            count = 0;
        }
        if filled != slab || count != 0 {
            return Err(Error::Format(format!("slab {x} has {filled} voxels, expected {slab}")));
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::Format("trailing data after last slab".into()));
    }
    Ok(g)
}

pub fn write_grid(path: &Path, g: &OccupancyGrid) -> Result<()> {
    write_text(path, &grid_to_text(g))
}

pub fn read_grid(path: &Path) -> Result<OccupancyGrid> {
    grid_from_text(&read_text(path)?)
}
