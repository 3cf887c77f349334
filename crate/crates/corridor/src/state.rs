//! Discrete solution state: a sorted Lagrangian particle cloud carrying
//! `(position, omega, rho, label)` per particle, with piecewise-linear
//! interpolation in between.
//!
//! Clouds are immutable after construction; every evolution step builds a
//! successor cloud. The first and last particle always carry
//! `omega = rho = 0`, which embeds compact support exactly and lets the
//! velocity integral run without a tail model.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::velocity::VelocityField;
use crate::{Error, Result};

/// Minimum number of particles in a valid cloud.
pub const MIN_PARTICLES: usize = 4;

/// Scalar model parameter pack: the forcing exponent `beta` in
/// `omega_t + u omega_x = rho / x^beta`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub beta: f64,
}

impl ModelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParam(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self { beta })
    }
}

/// Sorted Lagrangian marker cloud; the discrete representation of
/// `(omega, rho)` at one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    positions: Vec<f64>,
    omega: Vec<f64>,
    rho: Vec<f64>,
    label: Vec<f64>,
}

impl ParticleCloud {
    /// Build a cloud and check every invariant: strictly increasing
    /// nonnegative finite positions, entrywise nonnegative `omega`/`rho`,
    /// zero `omega`/`rho` at both ends, equal lengths >= 4.
    pub fn new(
        positions: Vec<f64>,
        omega: Vec<f64>,
        rho: Vec<f64>,
        label: Vec<f64>,
    ) -> Result<Self> {
        let n = positions.len();
        if n < MIN_PARTICLES {
            return Err(Error::InvalidCloud(format!(
                "need at least {MIN_PARTICLES} particles, got {n}"
            )));
        }
        if omega.len() != n || rho.len() != n || label.len() != n {
            return Err(Error::InvalidCloud(format!(
                "length mismatch: positions {n}, omega {}, rho {}, label {}",
                omega.len(),
                rho.len(),
                label.len()
            )));
        }
        if !positions.iter().all(|x| x.is_finite() && *x >= 0.0) {
            return Err(Error::InvalidCloud(
                "positions must be finite and >= 0".into(),
            ));
        }
        if let Some(i) = (1..n).find(|&i| positions[i] <= positions[i - 1]) {
            return Err(Error::InvalidCloud(format!(
                "positions not strictly increasing at index {i}: {} then {}",
                positions[i - 1],
                positions[i]
            )));
        }
        for (name, v) in [("omega", &omega), ("rho", &rho)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidCloud(format!(
                    "{name}[{i}] = {} must be finite and >= 0",
                    v[i]
                )));
            }
            if v[0] != 0.0 || v[n - 1] != 0.0 {
                return Err(Error::InvalidCloud(format!(
                    "{name} must vanish at the first and last particle (got {} and {})",
                    v[0],
                    v[n - 1]
                )));
            }
        }
        Ok(Self {
            positions,
            omega,
            rho,
            label,
        })
    }

    /// Internal constructor for evolution steps; invariants are the caller's
    /// responsibility and re-checked cheaply in debug builds.
    pub(crate) fn from_parts_unchecked(
        positions: Vec<f64>,
        omega: Vec<f64>,
        rho: Vec<f64>,
        label: Vec<f64>,
    ) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(omega.iter().all(|w| *w >= 0.0));
        Self {
            positions,
            omega,
            rho,
            label,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least MIN_PARTICLES
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn labels(&self) -> &[f64] {
        &self.label
    }

    /// Support of the discrete profile: positions of the first and last node.
    pub fn support(&self) -> (f64, f64) {
        (self.positions[0], self.positions[self.len() - 1])
    }

    /// Index of the particle whose label is closest to `label`.
    pub fn index_of_label(&self, label: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &l) in self.label.iter().enumerate() {
            let d = (l - label).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Piecewise-linear interpolant of `omega`; zero outside the support.
    pub fn interp_omega(&self, x: f64) -> f64 {
        interp(&self.positions, &self.omega, x)
    }

    /// Piecewise-linear interpolant of `rho`; zero outside the support.
    pub fn interp_rho(&self, x: f64) -> f64 {
        interp(&self.positions, &self.rho, x)
    }

    /// Maximum of the omega interpolant over `[a, b]`.
    ///
    /// For piecewise-linear data this is the max over interior nodes in
    /// `[a, b]` together with the interpolated values at both ends. Windows
    /// disjoint from the support give 0.
    pub fn sup_omega(&self, a: f64, b: f64) -> f64 {
        assert!(a < b, "sup_omega needs a < b, got [{a}, {b}]");
        let (lo, hi) = self.support();
        if b <= lo || a >= hi {
            return 0.0;
        }
        let mut m = self.interp_omega(a).max(self.interp_omega(b));
        let start = self.positions.partition_point(|&p| p < a);
        for i in start..self.len() {
            if self.positions[i] > b {
                break;
            }
            m = m.max(self.omega[i]);
        }
        m
    }

    /// Global sup norm `||omega||_{L^inf(0, inf)}`; the max node value.
    pub fn sup_omega_global(&self) -> f64 {
        self.omega.iter().cloned().fold(0.0, f64::max)
    }

    /// Indices of nodes with position in `[a, b]`.
    pub fn nodes_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let start = self.positions.partition_point(|&p| p < a);
        let end = self.positions.partition_point(|&p| p <= b);
        start..end
    }

    /// Write the profile snapshot CSV (`x,omega,rho,label`, 17 significant
    /// digits). With `velocity` given, append the `Q,u` columns.
    pub fn write_csv(&self, path: &Path, velocity: Option<&VelocityField>) -> Result<()> {
        let mut out = String::new();
        if velocity.is_some() {
            out.push_str("x,omega,rho,label,Q,u\n");
        } else {
            out.push_str("x,omega,rho,label\n");
        }
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.positions[i], self.omega[i], self.rho[i], self.label[i]
            ));
            if let Some(v) = velocity {
                let q = v.q_nodes()[i];
                out.push_str(&format!(",{:.16e},{:.16e}", q, -self.positions[i] * q));
            }
            out.push('\n');
        }
        write_file(path, &out)
    }

    /// Load a snapshot CSV written by [`ParticleCloud::write_csv`]. Extra
    /// columns (`Q,u`) are ignored.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("open {}", path.display()), e))?;
        let reader = BufReader::new(file);
        let mut cols: [Vec<f64>; 4] = [vec![], vec![], vec![], vec![]];
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Io(format!("read {}", path.display()), e))?;
            if lineno == 0 {
                if !line.starts_with("x,omega,rho,label") {
                    return Err(Error::Parse(
                        path.display().to_string(),
                        format!("unexpected header {line:?}"),
                    ));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 4 {
                return Err(Error::Parse(
                    path.display().to_string(),
                    format!(
                        "line {}: expected >= 4 fields, got {}",
                        lineno + 1,
                        fields.len()
                    ),
                ));
            }
            for (k, c) in cols.iter_mut().enumerate() {
                let v: f64 = fields[k].trim().parse().map_err(|_| {
                    Error::Parse(
                        path.display().to_string(),
                        format!("line {}: bad float {:?}", lineno + 1, fields[k]),
                    )
                })?;
                c.push(v);
            }
        }
        let [p, w, r, l] = cols;
        Self::new(p, w, r, l)
    }
}

/// Sample two profile functions on a strictly increasing grid.
///
/// `f` becomes `omega`, `g` becomes `rho`, the grid itself becomes both the
/// positions and the labels. Both functions must be nonnegative on the grid
/// and vanish at the two endpoints.
pub fn sample_profile<F, G>(f: F, g: G, grid: &[f64]) -> Result<ParticleCloud>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if let Some(i) = (1..grid.len()).find(|&i| grid[i] <= grid[i - 1]) {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at index {i}"
        )));
    }
    let omega: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let rho: Vec<f64> = grid.iter().map(|&x| g(x)).collect();
    for (name, v) in [("omega", &omega), ("rho", &rho)] {
        if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidCloud(format!(
                "sampled {name}[{i}] = {} at x = {} is negative or non-finite",
                v[i], grid[i]
            )));
        }
    }
    ParticleCloud::new(grid.to_vec(), omega, rho, grid.to_vec())
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    // index of the first node >= x
    let j = xs.partition_point(|&p| p < x);
    if j < n && xs[j] == x {
        return ys[j];
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = (x - x0) / (x1 - x0);
    ys[j - 1] + t * (ys[j] - ys[j - 1])
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::Io(format!("create dir {}", dir.display()), e))?;
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Io(format!("create {}", path.display()), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::Io(format!("write {}", path.display()), e))
}
