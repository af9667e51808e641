//! Admissible initial data.
//!
//! Families are strategies behind [`InitStrategy`], looked up by name in an
//! [`InitRegistry`]. Every family yields `v0, theta0` at cells and
//! `u0, w0, b0` at nodes, with the node fields vanishing at both ends and
//! `v0, theta0` bounded below by the requested floor.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{kinetic_magnetic, mass, theta_bar};
use crate::error::InitError;
use crate::grid::Grid;
use crate::params::PhysParams;
use crate::state::{equilibrium_state, EquilibriumTarget, Field, SimState};

/// Declarative description of an initial-data family.
#[derive(Debug, Clone, PartialEq)]
pub struct InitFamily {
    /// Registry name: `single_mode`, `multi_mode_random`, `custom_tabulated`.
    pub kind: String,
    pub a_v: f64,
    pub a_u: f64,
    pub a_w: [f64; 2],
    pub a_b: [f64; 2],
    pub a_theta: f64,
    /// Base wavenumber `k`.
    pub wavenumber: u32,
    /// Mean temperature level `c_theta`.
    pub theta_base: f64,
    /// Number of Fourier modes for `multi_mode_random`.
    pub modes: usize,
    pub seed: u64,
    /// Lower bound required of `v0` and `theta0`.
    pub floor: f64,
    /// Field name (`v`, `theta`, `u`, `w1`, `w2`, `b1`, `b2`) to table path,
    /// for `custom_tabulated`.
    pub tables: BTreeMap<String, PathBuf>,
}

impl Default for InitFamily {
    fn default() -> Self {
        Self {
            kind: "single_mode".to_string(),
            a_v: 0.0,
            a_u: 0.0,
            a_w: [0.0; 2],
            a_b: [0.0; 2],
            a_theta: 0.0,
            wavenumber: 1,
            theta_base: 1.0,
            modes: 8,
            seed: 0,
            floor: 0.05,
            tables: BTreeMap::new(),
        }
    }
}

impl InitFamily {
    /// Single mode with every amplitude equal to `amp`.
    pub fn single_mode(amp: f64) -> Self {
        Self {
            a_v: amp,
            a_u: amp,
            a_w: [amp; 2],
            a_b: [amp; 2],
            a_theta: amp,
            ..Self::default()
        }
    }
}

pub trait InitStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, family: &InitFamily, grid: Grid) -> Result<SimState, InitError>;
}

/// `v0 = 1 + a_v sin(2 pi k x)`, `u0 = a_u sin(pi k x)`,
/// `theta0 = c_theta + a_theta cos(pi k x)`. The first transverse component
/// of `w0`, `b0` uses `sin(pi k x)`, the second `sin(2 pi k x)`.
pub struct SingleMode;

impl InitStrategy for SingleMode {
    fn name(&self) -> &'static str {
        "single_mode"
    }

    fn build(&self, f: &InitFamily, grid: Grid) -> Result<SimState, InitError> {
        let k = f.wavenumber as f64;
        let mut s = blank(grid);
        for c in 0..grid.n_cells() {
            let x = grid.cell_x(c);
            s.v[c] = 1.0 + f.a_v * (2.0 * PI * k * x).sin();
            s.theta[c] = f.theta_base + f.a_theta * (PI * k * x).cos();
        }
        for j in 1..grid.n_cells() {
            let x = grid.node_x(j);
            let (s1, s2) = ((PI * k * x).sin(), (2.0 * PI * k * x).sin());
            s.u[j] = f.a_u * s1;
            s.w[j] = [f.a_w[0] * s1, f.a_w[1] * s2];
            s.b[j] = [f.a_b[0] * s1, f.a_b[1] * s2];
        }
        check_floor(&s, f.floor)?;
        Ok(s)
    }
}

/// Random Fourier series with coefficients uniform in `[-1, 1]` damped by
/// `1/m^2`, resampled until both floors hold.
pub struct MultiModeRandom;

const MAX_ATTEMPTS: usize = 1000;

impl InitStrategy for MultiModeRandom {
    fn name(&self) -> &'static str {
        "multi_mode_random"
    }

    fn build(&self, f: &InitFamily, grid: Grid) -> Result<SimState, InitError> {
        let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
        let modes = f.modes.max(1);
        for _ in 0..MAX_ATTEMPTS {
            let mut coeffs = |amp: f64| -> Vec<f64> {
                (1..=modes)
                    .map(|m| amp * rng.gen_range(-1.0..=1.0) / (m * m) as f64)
                    .collect()
            };
            let cv = coeffs(f.a_v);
            let ctheta = coeffs(f.a_theta);
            let cu = coeffs(f.a_u);
            let cw = [coeffs(f.a_w[0]), coeffs(f.a_w[1])];
            let cb = [coeffs(f.a_b[0]), coeffs(f.a_b[1])];

            let series = |coef: &[f64], x: f64, freq: f64, cosine: bool| -> f64 {
                coef.iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let arg = freq * (i + 1) as f64 * PI * x;
                        a * if cosine { arg.cos() } else { arg.sin() }
                    })
                    .sum()
            };

            let mut s = blank(grid);
            for c in 0..grid.n_cells() {
                let x = grid.cell_x(c);
                s.v[c] = 1.0 + series(&cv, x, 2.0, false);
                s.theta[c] = f.theta_base + series(&ctheta, x, 1.0, true);
            }
            for j in 1..grid.n_cells() {
                let x = grid.node_x(j);
                s.u[j] = series(&cu, x, 1.0, false);
                for k in 0..2 {
                    s.w[j][k] = series(&cw[k], x, 1.0, false);
                    s.b[j][k] = series(&cb[k], x, 1.0, false);
                }
            }
            if check_floor(&s, f.floor).is_ok() {
                return Ok(s);
            }
        }
        Err(InitError::RejectionExhausted(MAX_ATTEMPTS))
    }
}

/// Fields read from two-column `(x, value)` tables and linearly
/// interpolated to cells and nodes. Missing fields default to the unit
/// equilibrium.
pub struct CustomTabulated;

impl InitStrategy for CustomTabulated {
    fn name(&self) -> &'static str {
        "custom_tabulated"
    }

    fn build(&self, f: &InitFamily, grid: Grid) -> Result<SimState, InitError> {
        let mut s = blank(grid);
        for (name, path) in &f.tables {
            let table = read_table(path)?;
            let n = grid.n_cells();
            match name.as_str() {
                "v" | "theta" => {
                    let target = if name == "v" { &mut s.v } else { &mut s.theta };
                    for (c, slot) in target.iter_mut().enumerate() {
                        *slot = interpolate(&table, grid.cell_x(c));
                    }
                }
                "u" | "w1" | "w2" | "b1" | "b2" => {
                    let field = match name.as_bytes()[0] {
                        b'u' => Field::U,
                        b'w' => Field::W,
                        _ => Field::B,
                    };
                    for end in [0.0, 1.0] {
                        let value = interpolate(&table, end);
                        if value.abs() > 1e-12 {
                            return Err(InitError::BoundaryIncompatible { field, value });
                        }
                    }
                    for j in 1..n {
                        let value = interpolate(&table, grid.node_x(j));
                        match name.as_str() {
                            "u" => s.u[j] = value,
                            "w1" => s.w[j][0] = value,
                            "w2" => s.w[j][1] = value,
                            "b1" => s.b[j][0] = value,
                            _ => s.b[j][1] = value,
                        }
                    }
                }
                other => {
                    return Err(InitError::Table {
                        path: path.display().to_string(),
                        reason: format!("unknown field {other:?}"),
                    })
                }
            }
        }
        check_floor(&s, f.floor)?;
        Ok(s)
    }
}

fn blank(grid: Grid) -> SimState {
    equilibrium_state(grid, EquilibriumTarget::normalized()).expect("unit target is valid")
}

fn check_floor(s: &SimState, floor: f64) -> Result<(), InitError> {
    for (field, values) in [(Field::V, &s.v), (Field::Theta, &s.theta)] {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min >= floor) || !(min > 0.0) {
            return Err(InitError::BelowFloor { field, min, floor });
        }
    }
    Ok(())
}

/// Parses whitespace- or comma-separated `(x, value)` rows; `#` starts a
/// comment. Abscissae must increase strictly and cover `[0, 1]`.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>, InitError> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text).map_err(|reason| InitError::Table {
        path: path.display().to_string(),
        reason,
    })
}

fn parse_table(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(format!("line {}: expected two columns", lineno + 1));
        }
        let parse = |c: &str| {
            c.parse::<f64>()
                .map_err(|e| format!("line {}: {e}", lineno + 1))
        };
        rows.push((parse(cols[0])?, parse(cols[1])?));
    }
    if rows.len() < 2 {
        return Err("need at least two rows".into());
    }
    if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("x must increase strictly".into());
    }
    if rows[0].0 > 1e-12 || rows[rows.len() - 1].0 < 1.0 - 1e-12 {
        return Err("table must cover [0, 1]".into());
    }
    Ok(rows)
}

fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let i = table.partition_point(|row| row.0 <= x);
    if i == 0 {
        return table[0].1;
    }
    if i == table.len() {
        return table[table.len() - 1].1;
    }
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Named initial-data strategies.
#[derive(Clone)]
pub struct InitRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn InitStrategy>>,
}

impl InitRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(SingleMode));
        r.register(Arc::new(MultiModeRandom));
        r.register(Arc::new(CustomTabulated));
        r
    }

    pub fn register(&mut self, strategy: Arc<dyn InitStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn InitStrategy>> {
        self.strategies.get(name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }

    pub fn build(&self, family: &InitFamily, grid: Grid) -> Result<SimState, InitError> {
        let strategy = self
            .get(&family.kind)
            .ok_or_else(|| InitError::UnknownFamily(family.kind.clone()))?;
        strategy.build(family, grid)
    }
}

impl Default for InitRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Builds initial data from the built-in families.
pub fn make_initial(family: &InitFamily, grid: Grid) -> Result<SimState, InitError> {
    InitRegistry::builtin().build(family, grid)
}

/// Rescales `v` to unit mass, then `theta` so that
/// `∫ (c_v theta + (u^2 + |w|^2 + v|b|^2)/2) dx = 1`.
pub fn normalize(s: &SimState, p: &PhysParams) -> Result<SimState, InitError> {
    s.check_shape()?;
    let mut out = s.clone();
    let mass = mass(s);
    out.v.iter_mut().for_each(|v| *v /= mass);

    let energy = kinetic_magnetic(&out);
    if energy >= 1.0 {
        return Err(InitError::EnergyExcess {
            energy,
            excess: energy - 1.0,
        });
    }
    let heat = p.c_v * theta_bar(&out);
    let scale = (1.0 - energy) / heat;
    out.theta.iter_mut().for_each(|th| *th *= scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{mass, total_energy};
    use crate::state::validate_state;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn zero_amplitude_is_equilibrium() {
        let s = make_initial(&InitFamily::default(), grid(32)).unwrap();
        assert_eq!(s, blank(grid(32)));
    }

    #[test]
    fn single_mode_velocity_profile() {
        let f = InitFamily {
            a_u: 0.1,
            ..InitFamily::default()
        };
        let s = make_initial(&f, grid(64)).unwrap();
        assert!((s.u[32] - 0.1).abs() < 1e-15);
        assert_eq!(s.u[0], 0.0);
        assert_eq!(s.u[64], 0.0);
        assert!(validate_state(&s).is_empty());
    }

    #[test]
    fn amplitude_below_floor_rejected() {
        let f = InitFamily {
            a_theta: 0.98,
            ..InitFamily::default()
        };
        assert!(matches!(
            make_initial(&f, grid(32)),
            Err(InitError::BelowFloor { field: Field::Theta, .. })
        ));
    }

    #[test]
    fn random_family_is_deterministic_and_admissible() {
        let f = InitFamily {
            kind: "multi_mode_random".into(),
            seed: 42,
            ..InitFamily::single_mode(0.3)
        };
        let a = make_initial(&f, grid(50)).unwrap();
        let b = make_initial(&f, grid(50)).unwrap();
        assert_eq!(a, b);
        assert!(validate_state(&a).is_empty());
        let c = make_initial(&InitFamily { seed: 43, ..f }, grid(50)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn impossible_random_floor_exhausts() {
        let f = InitFamily {
            kind: "multi_mode_random".into(),
            floor: 5.0,
            ..InitFamily::single_mode(0.1)
        };
        assert!(matches!(
            make_initial(&f, grid(16)),
            Err(InitError::RejectionExhausted(_))
        ));
    }

    #[test]
    fn unknown_family() {
        let f = InitFamily {
            kind: "nope".into(),
            ..InitFamily::default()
        };
        assert!(matches!(make_initial(&f, grid(16)), Err(InitError::UnknownFamily(_))));
        assert_eq!(
            InitRegistry::builtin().names(),
            vec!["custom_tabulated", "multi_mode_random", "single_mode"]
        );
    }

    #[test]
    fn table_parsing_and_interpolation() {
        let t = parse_table("# x value\n0 0\n0.5, 1.0\n1 0\n").unwrap();
        assert_eq!(interpolate(&t, 0.25), 0.5);
        assert_eq!(interpolate(&t, 0.75), 0.5);
        assert_eq!(interpolate(&t, 1.0), 0.0);
        assert!(parse_table("0 1\n0.5 1\n").is_err());
        assert!(parse_table("0 1\n1 1\n0.5 1\n").is_err());
        assert!(parse_table("0 1 2\n1 1\n").is_err());
    }

    #[test]
    fn tabulated_family_reads_files() {
        let dir = std::env::temp_dir().join(format!("mhd1d-init-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let v_path = dir.join("v.txt");
        let u_path = dir.join("u.txt");
        std::fs::write(&v_path, "0 1.2\n1 0.8\n").unwrap();
        std::fs::write(&u_path, "0 0\n0.5 0.2\n1 0\n").unwrap();
        let mut f = InitFamily {
            kind: "custom_tabulated".into(),
            ..InitFamily::default()
        };
        f.tables.insert("v".into(), v_path.clone());
        f.tables.insert("u".into(), u_path);
        let s = make_initial(&f, grid(10)).unwrap();
        assert!((s.v[0] - (1.2 - 0.4 * 0.05)).abs() < 1e-14);
        assert!((s.u[5] - 0.2).abs() < 1e-14);
        assert!(validate_state(&s).is_empty());

        let bad = dir.join("w.txt");
        std::fs::write(&bad, "0 0.1\n1 0\n").unwrap();
        f.tables.insert("w1".into(), bad);
        assert!(matches!(
            make_initial(&f, grid(10)),
            Err(InitError::BoundaryIncompatible { field: Field::W, .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn normalize_examples() {
        let p = PhysParams::normalized(0.0).unwrap();
        let mut s = blank(grid(16));
        s.v.iter_mut().for_each(|v| *v = 2.0);
        let out = normalize(&s, &p).unwrap();
        assert!(out.v.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(out.theta.iter().all(|&th| (th - 1.0).abs() < 1e-15));

        let e = blank(grid(16));
        let out = normalize(&e, &p).unwrap();
        for (a, b) in out.v.iter().chain(&out.theta).zip(e.v.iter().chain(&e.theta)) {
            assert!((a - b).abs() < 1e-15);
        }

        let mut s = blank(grid(64));
        for j in 1..64 {
            s.u[j] = (PI * s.grid.node_x(j)).sin();
        }
        let out = normalize(&s, &p).unwrap();
        assert!(out.theta.iter().all(|&th| (th - 0.75).abs() < 1e-14));
    }

    #[test]
    fn normalize_rejects_excess_energy() {
        let p = PhysParams::normalized(0.0).unwrap();
        let mut s = blank(grid(16));
        for j in 1..16 {
            s.u[j] = 2.0;
        }
        assert!(matches!(normalize(&s, &p), Err(InitError::EnergyExcess { .. })));
    }

    #[test]
    fn normalize_is_idempotent_and_hits_targets() {
        let p = PhysParams::normalized(1.0).unwrap();
        let f = InitFamily {
            kind: "multi_mode_random".into(),
            seed: 7,
            ..InitFamily::single_mode(0.4)
        };
        let s = make_initial(&f, grid(40)).unwrap();
        let once = normalize(&s, &p).unwrap();
        let twice = normalize(&once, &p).unwrap();
        assert!((mass(&once) - 1.0).abs() < 1e-14);
        assert!((total_energy(&once, &p) - 1.0).abs() < 1e-14);
        for (a, b) in once.theta.iter().zip(&twice.theta) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(validate_state(&twice).is_empty());
    }
}
