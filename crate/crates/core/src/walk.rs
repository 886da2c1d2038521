//! Walker state and the coin/translation operators for one step of a
//! discrete-time quantum walk on a finite 1D lattice.
//!
//! The lattice holds `2 * n_max + 1` sites indexed `x = -n_max ..= n_max`.
//! Each site carries two complex amplitudes, one per internal coin state
//! `|+>` and `|->`. A step applies the coin at every site and then shifts
//! `|+>` one site right and `|->` one site left (or the reverse for the
//! inverse translation).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angles of the general two-state coin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinParams {
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl CoinParams {
    /// Coin with `phi1 = phi2 = pi/2`, which depends on `theta` alone.
    pub fn new(theta: f64) -> Self {
        Self { theta, phi1: FRAC_PI_2, phi2: FRAC_PI_2 }
    }

    pub fn with_phases(theta: f64, phi1: f64, phi2: f64) -> Self {
        Self { theta, phi1, phi2 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("phi1", self.phi1), ("phi2", self.phi2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("coin angle {name} = {v} is not finite")));
            }
        }
        Ok(())
    }
}

impl Default for CoinParams {
    fn default() -> Self {
        Self::new(0.0)
    }
}

/// A 2x2 complex matrix acting on `(plus, minus)` at a single site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinMatrix(pub [[Complex64; 2]; 2]);

impl CoinMatrix {
    #[inline]
    pub fn apply(&self, plus: Complex64, minus: Complex64) -> (Complex64, Complex64) {
        let m = &self.0;
        (m[0][0] * plus + m[0][1] * minus, m[1][0] * plus + m[1][1] * minus)
    }

    /// Largest entry of `|C^dagger C - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.0;
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += m[k][i].conj() * m[k][j];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// `[[cos t, e^{i p1} sin t], [e^{i p2} sin t, -e^{i (p1 + p2)} cos t]]`
pub fn coin_matrix(params: CoinParams) -> Result<CoinMatrix> {
    params.validate()?;
    let (s, c) = params.theta.sin_cos();
    let e1 = unit_phase(params.phi1);
    let e2 = unit_phase(params.phi2);
    let e12 = unit_phase(params.phi1 + params.phi2);
    Ok(CoinMatrix([
        [Complex64::new(c, 0.0), e1 * s],
        [e2 * s, -e12 * c],
    ]))
}

/// `e^{i phi}`, exact at integer multiples of `pi/2` so that the default
/// coin at `theta = 0` is exactly the identity.
fn unit_phase(phi: f64) -> Complex64 {
    let quarter_turns = phi / FRAC_PI_2;
    let k = quarter_turns.round();
    if (quarter_turns - k).abs() <= 4.0 * f64::EPSILON * k.abs().max(1.0) {
        return match (k as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, phi)
}

/// Which translation operator follows the coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `|x,+> -> |x+1,+>`, `|x,-> -> |x-1,->`
    Forward,
    /// `|x,+> -> |x-1,+>`, `|x,-> -> |x+1,->`
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkerState {
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    n_max: usize,
}

impl WalkerState {
    /// All-zero state on a lattice of half-width `n_max`.
    pub fn zeros(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        let len = 2 * n_max + 1;
        Ok(Self {
            plus: vec![Complex64::new(0.0, 0.0); len],
            minus: vec![Complex64::new(0.0, 0.0); len],
            n_max,
        })
    }

    /// Builds a state from explicit amplitude arrays of length `2 * n_max + 1`.
    pub fn from_amplitudes(plus: Vec<Complex64>, minus: Vec<Complex64>) -> Result<Self> {
        if plus.len() != minus.len() || plus.len() < 3 || plus.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "amplitude arrays must have equal odd length >= 3 (got {} and {})",
                plus.len(),
                minus.len()
            )));
        }
        let n_max = (plus.len() - 1) / 2;
        Ok(Self { plus, minus, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Array index of the origin `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    /// Lattice coordinate of array index `i`.
    pub fn site(&self, i: usize) -> i64 {
        i as i64 - self.n_max as i64
    }

    pub fn index_of(&self, x: i64) -> Option<usize> {
        let i = x + self.n_max as i64;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    /// `(plus, minus)` amplitudes at site `x`.
    pub fn amplitude(&self, x: i64) -> Option<(Complex64, Complex64)> {
        self.index_of(x).map(|i| (self.plus[i], self.minus[i]))
    }

    pub fn set_amplitude(&mut self, x: i64, plus: Complex64, minus: Complex64) -> Result<()> {
        let i = self
            .index_of(x)
            .ok_or_else(|| Error::InvalidParameter(format!("site {x} outside lattice")))?;
        self.plus[i] = plus;
        self.minus[i] = minus;
        Ok(())
    }

    /// `sum_x |plus(x)|^2 + |minus(x)|^2`
    pub fn norm_sqr(&self) -> f64 {
        self.plus.iter().chain(&self.minus).map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let z = Complex64::from_polar(1.0, phase);
        Self {
            plus: self.plus.iter().map(|a| a * z).collect(),
            minus: self.minus.iter().map(|a| a * z).collect(),
            n_max: self.n_max,
        }
    }

    pub fn apply_coin_in_place(&mut self, coin: &CoinMatrix) {
        for (p, m) in self.plus.iter_mut().zip(self.minus.iter_mut()) {
            let (np, nm) = coin.apply(*p, *m);
            *p = np;
            *m = nm;
        }
    }

    pub fn apply_translation_in_place(&mut self, direction: Direction) -> Result<()> {
        let last = self.len() - 1;
        let zero = Complex64::new(0.0, 0.0);
        // The component that would leave the lattice must be empty at the edge.
        let (right_mover, left_mover) = match direction {
            Direction::Forward => (&self.plus, &self.minus),
            Direction::Inverse => (&self.minus, &self.plus),
        };
        if right_mover[last] != zero {
            return Err(Error::BoundaryOverflow { site: self.n_max as i64 });
        }
        if left_mover[0] != zero {
            return Err(Error::BoundaryOverflow { site: -(self.n_max as i64) });
        }
        match direction {
            Direction::Forward => {
                self.plus.rotate_right(1);
                self.minus.rotate_left(1);
            }
            Direction::Inverse => {
                self.plus.rotate_left(1);
                self.minus.rotate_right(1);
            }
        }
        Ok(())
    }

    /// Coin then translation, mutating in place.
    pub fn step_in_place(&mut self, coin: &CoinMatrix, direction: Direction) -> Result<()> {
        self.apply_coin_in_place(coin);
        self.apply_translation_in_place(direction)
    }
}

/// `(|0,+> + |0,->) / sqrt(2)` on a lattice of half-width `n_max`.
pub fn initial_state(n_max: usize) -> Result<WalkerState> {
    let mut state = WalkerState::zeros(n_max)?;
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let o = state.origin_index();
    state.plus[o] = a;
    state.minus[o] = a;
    Ok(state)
}

pub fn apply_coin(state: &WalkerState, params: CoinParams) -> Result<WalkerState> {
    let coin = coin_matrix(params)?;
    let mut out = state.clone();
    out.apply_coin_in_place(&coin);
    Ok(out)
}

pub fn apply_translation(state: &WalkerState, direction: Direction) -> Result<WalkerState> {
    let mut out = state.clone();
    out.apply_translation_in_place(direction)?;
    Ok(out)
}

pub fn step(state: &WalkerState, params: CoinParams, direction: Direction) -> Result<WalkerState> {
    let coin = coin_matrix(params)?;
    let mut out = state.clone();
    out.step_in_place(&coin, direction)?;
    Ok(out)
}

/// Lattice size, run length, base angle and seed of one walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Lattice half-width `N`.
    pub n_max: usize,
    /// Number of evolution steps, at most `n_max`.
    pub n_t: usize,
    pub theta0: f64,
    pub coin_phis: (f64, f64),
    pub seed: u64,
}

impl WalkConfig {
    /// Square walk (`n_t = n_max = n`) with the default phases.
    pub fn new(n: usize, theta0: f64, seed: u64) -> Self {
        Self { n_max: n, n_t: n, theta0, coin_phis: (FRAC_PI_2, FRAC_PI_2), seed }
    }

    pub fn with_steps(mut self, n_t: usize) -> Self {
        self.n_t = n_t;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn coin(&self, theta: f64) -> CoinParams {
        CoinParams::with_phases(theta, self.coin_phis.0, self.coin_phis.1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 1 || self.n_t > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= n_t <= n_max (n_t = {}, n_max = {})",
                self.n_t, self.n_max
            )));
        }
        if !(self.theta0 > 0.0 && self.theta0 < FRAC_PI_2) {
            return Err(Error::InvalidConfig(format!(
                "theta0 = {} must lie strictly inside (0, pi/2)",
                self.theta0
            )));
        }
        if !self.coin_phis.0.is_finite() || !self.coin_phis.1.is_finite() {
            return Err(Error::InvalidConfig("coin phases must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn coin_identity_at_zero() {
        let m = coin_matrix(CoinParams::new(0.0)).unwrap().0;
        assert!(close(m[0][0], c(1.0, 0.0)));
        assert!(close(m[0][1], c(0.0, 0.0)));
        assert!(close(m[1][0], c(0.0, 0.0)));
        assert!(close(m[1][1], c(1.0, 0.0)));
    }

    #[test]
    fn coin_at_half_pi() {
        let m = coin_matrix(CoinParams::new(FRAC_PI_2)).unwrap().0;
        assert!(close(m[0][0], c(0.0, 0.0)));
        assert!(close(m[0][1], c(0.0, 1.0)));
        assert!(close(m[1][0], c(0.0, 1.0)));
        assert!(close(m[1][1], c(0.0, 0.0)));
    }

    #[test]
    fn coin_at_quarter_pi() {
        let m = coin_matrix(CoinParams::new(FRAC_PI_4)).unwrap().0;
        let r = FRAC_1_SQRT_2;
        assert!(close(m[0][0], c(r, 0.0)));
        assert!(close(m[0][1], c(0.0, r)));
        assert!(close(m[1][0], c(0.0, r)));
        assert!(close(m[1][1], c(r, 0.0)));
    }

    #[test]
    fn coin_rejects_non_finite() {
        assert!(matches!(coin_matrix(CoinParams::new(f64::NAN)), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            coin_matrix(CoinParams::with_phases(0.1, f64::INFINITY, 0.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn initial_state_layout() {
        let s = initial_state(1).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(s.plus(), &[c(0.0, 0.0), c(r, 0.0), c(0.0, 0.0)]);
        assert_eq!(s.minus(), &[c(0.0, 0.0), c(r, 0.0), c(0.0, 0.0)]);

        let s = initial_state(5).unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s.origin_index(), 5);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(matches!(initial_state(0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn quarter_pi_coin_on_initial_state() {
        let s = apply_coin(&initial_state(3).unwrap(), CoinParams::new(FRAC_PI_4)).unwrap();
        let (p, m) = s.amplitude(0).unwrap();
        assert!(close(p, c(0.5, 0.5)));
        assert!(close(m, c(0.5, 0.5)));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_coin_leaves_state_unchanged() {
        let mut s = WalkerState::zeros(3).unwrap();
        s.set_amplitude(-1, c(0.3, 0.1), c(0.2, -0.4)).unwrap();
        s.set_amplitude(2, c(-0.5, 0.0), c(0.1, 0.6)).unwrap();
        assert_eq!(apply_coin(&s, CoinParams::new(0.0)).unwrap(), s);
    }

    #[test]
    fn translation_moves_components() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let mut s = WalkerState::zeros(3).unwrap();
        s.set_amplitude(0, one, zero).unwrap();
        let t = apply_translation(&s, Direction::Forward).unwrap();
        assert_eq!(t.amplitude(1), Some((one, zero)));
        assert_eq!(t.amplitude(0), Some((zero, zero)));

        let mut s = WalkerState::zeros(3).unwrap();
        s.set_amplitude(0, zero, one).unwrap();
        let t = apply_translation(&s, Direction::Forward).unwrap();
        assert_eq!(t.amplitude(-1), Some((zero, one)));

        let t = apply_translation(&s, Direction::Inverse).unwrap();
        assert_eq!(t.amplitude(1), Some((zero, one)));
    }

    #[test]
    fn translation_overflow_is_an_error() {
        let mut s = WalkerState::zeros(2).unwrap();
        s.set_amplitude(2, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(
            apply_translation(&s, Direction::Forward),
            Err(Error::BoundaryOverflow { site: 2 })
        ));
        // the |+> amplitude at the right edge moves inward under the inverse
        assert!(apply_translation(&s, Direction::Inverse).is_ok());
    }

    #[test]
    fn one_step_quarter_pi_splits_evenly() {
        let s = step(&initial_state(4).unwrap(), CoinParams::new(FRAC_PI_4), Direction::Forward).unwrap();
        let p = |x| {
            let (a, b) = s.amplitude(x).unwrap();
            a.norm_sqr() + b.norm_sqr()
        };
        assert!((p(1) - 0.5).abs() < 1e-15);
        assert!((p(-1) - 0.5).abs() < 1e-15);
        assert_eq!(p(0), 0.0);
    }

    #[test]
    fn identity_step_sends_components_apart() {
        let s = step(&initial_state(4).unwrap(), CoinParams::new(0.0), Direction::Forward).unwrap();
        let r = FRAC_1_SQRT_2;
        assert_eq!(s.amplitude(1), Some((c(r, 0.0), c(0.0, 0.0))));
        assert_eq!(s.amplitude(-1), Some((c(0.0, 0.0), c(r, 0.0))));
    }

    #[test]
    fn general_phases_are_unitary() {
        let m = coin_matrix(CoinParams::with_phases(0.7, 0.3, -1.9)).unwrap();
        assert!(m.unitarity_defect() < 1e-14);
        let m = coin_matrix(CoinParams::with_phases(PI / 3.0, 2.0, 5.0)).unwrap();
        assert!(m.unitarity_defect() < 1e-14);
    }

    #[test]
    fn walk_config_validation() {
        assert!(WalkConfig::new(10, PI / 6.0, 0).validate().is_ok());
        assert!(WalkConfig::new(10, PI / 6.0, 0).with_steps(11).validate().is_err());
        assert!(WalkConfig::new(10, PI / 6.0, 0).with_steps(0).validate().is_err());
        assert!(WalkConfig::new(10, 0.0, 0).validate().is_err());
        assert!(WalkConfig::new(10, FRAC_PI_2, 0).validate().is_err());
    }
}
