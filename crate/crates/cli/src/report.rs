//! Text tables, JSON summaries and CSV export.

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde_json::{json, Value};

use evatrap::config::Simulation;
use evatrap::fields::Axis;
use evatrap::{trap_properties, StateSpec, TrapProperties, TrapResult};

pub struct Summary {
    hash: String,
    shape: [usize; 3],
    axis: Axis,
    sliders: Vec<(String, f64)>,
    levels: Vec<(StateSpec, Vec<TrapProperties>)>,
}

impl Summary {
    pub fn new(sim: &Simulation, result: &TrapResult) -> evatrap::Result<Self> {
        let axis = sim.trap().axis;
        let levels = result
            .levels
            .iter()
            .enumerate()
            .map(|(k, level)| {
                let sheets = (0..level.dim())
                    .map(|s| trap_properties(result, k, s, axis, result.mass))
                    .collect::<evatrap::Result<Vec<_>>>()?;
                Ok((level.state, sheets))
            })
            .collect::<evatrap::Result<Vec<_>>>()?;
        let sliders = sim
            .sliders
            .iter()
            .map(|s| (s.name.clone(), result.member_powers[s.members[0]]))
            .collect();
        Ok(Summary {
            hash: result.hash.clone(),
            shape: result.axes.shape(),
            axis,
            sliders,
            levels,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "hash": self.hash,
            "shape": self.shape,
            "trap_axis": self.axis.name(),
            "sliders": self.sliders.iter().map(|(n, p)| json!({"name": n, "power_W": p})).collect::<Vec<_>>(),
            "levels": self.levels.iter().map(|(state, sheets)| json!({
                "state": state,
                "label": state.to_string(),
                "sheets": sheets,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let [nx, ny, nz] = self.shape;
        let _ = writeln!(s, "hash     {}", self.hash);
        let _ = writeln!(s, "grid     {nx} x {ny} x {nz} ({} points)", nx * ny * nz);
        let powers: Vec<String> = self.sliders.iter().map(|(n, p)| format!("{n} = {}", milliwatts(*p))).collect();
        let _ = writeln!(s, "powers   {}", powers.join(", "));
        let _ = writeln!(s, "trap axis {}", self.axis.name());
        for (state, sheets) in &self.levels {
            let _ = writeln!(s, "\n{state}");
            let _ = writeln!(
                s,
                "{:>5} {:>8} {:>10} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>14}",
                "sheet", "stable", "depth/mK", "surface/nm", "x/nm", "y/nm", "z/nm", "nu_x/kHz", "nu_y/kHz", "nu_z/kHz", "broadening/mK"
            );
            for (k, p) in sheets.iter().enumerate() {
                let pos = p.position.map(|r| r.map(|c| format!("{:.1}", c * 1e9)));
                let coord = |i: usize| pos.as_ref().map_or("-".to_string(), |r| r[i].clone());
                let freq = |i: usize| p.frequencies_hz[i].map_or("-".to_string(), |f| format!("{:.1}", f / 1e3));
                let _ = writeln!(
                    s,
                    "{:>5} {:>8} {:>10} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>14}",
                    k,
                    if p.stable { "yes" } else { "no" },
                    format!("{:.4}", p.depth_mk),
                    p.distance_to_surface.map_or("-".to_string(), |d| format!("{:.1}", d * 1e9)),
                    coord(0),
                    coord(1),
                    coord(2),
                    freq(0),
                    freq(1),
                    freq(2),
                    p.broadening_mk.map_or("-".to_string(), |b| format!("{b:.4e}")),
                );
            }
        }
        s
    }
}

/// One row per grid point: coordinates, the mask flag and every sheet of
/// every level in mK. Points inside material carry `nan`.
pub fn write_csv(result: &TrapResult, path: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let mut header = vec!["x_m".to_string(), "y_m".into(), "z_m".into(), "inside".into()];
    let mut columns = Vec::new();
    for (k, level) in result.levels.iter().enumerate() {
        for sheet in 0..level.dim() {
            header.push(format!("level{k}_sheet{sheet}_mK"));
            columns.push(level.sheet_mk(sheet));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for i in 0..result.axes.len() {
        line.clear();
        let [x, y, z] = result.axes.coordinates(i);
        let inside = result.mask[i];
        let _ = write!(line, "{x:e},{y:e},{z:e},{}", inside as u8);
        for col in &columns {
            if inside {
                line.push_str(",nan");
            } else {
                let _ = write!(line, ",{:e}", col[i]);
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn milliwatts(p: f64) -> String {
    format!("{} mW", sig(p * 1e3))
}

/// Four significant digits without trailing zeros.
pub fn sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = (3 - v.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{v:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
