//! Bound-state energies: partial sums of the remainder over the parameter
//! chain, and the closed forms for each family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{remainder, next_params, CoulombParams, Family, FamilyCoeffs, FamilyModel, ParamTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PartialSum,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub n: usize,
    pub energy: f64,
    /// False for levels past the turnover of a reduced spectrum.
    pub bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub family: Family,
    pub method: Method,
    pub coeffs: FamilyCoeffs,
    pub params0: ParamTriple,
    pub levels: Vec<Level>,
    pub warnings: Vec<String>,
}

impl SpectrumTable {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// True when E_n never decreases with n.
    pub fn is_monotone(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].energy >= w[0].energy)
    }

    /// True when two levels coincide to `tol`.
    pub fn has_degeneracy(&self, tol: f64) -> bool {
        self.levels.windows(2).any(|w| (w[1].energy - w[0].energy).abs() <= tol * w[1].energy.abs().max(1.0))
    }

    fn table(family: Family, method: Method, coeffs: FamilyCoeffs, params0: ParamTriple, energies: Vec<f64>) -> Self {
        let levels = energies.into_iter().enumerate().map(|(n, energy)| Level { n, energy, bound: true }).collect();
        let mut t = Self { family, method, coeffs, params0, levels, warnings: Vec::new() };
        if !t.is_monotone() {
            t.warnings.push("spectrum is not monotone in n (some remainders are negative)".into());
        }
        t
    }
}

/// E_n = Σ_{k<n} R(λ_k) for n = 0..=n_max, without checking the family constraints.
pub fn spectrum_sum_formal(family: Family, coeffs: FamilyCoeffs, params0: ParamTriple, n_max: usize) -> SpectrumTable {
    let mut energies = Vec::with_capacity(n_max + 1);
    let mut e = 0.0;
    let mut p = params0;
    energies.push(e);
    for _ in 0..n_max {
        e += remainder(family, &coeffs, p);
        p = next_params(family, &coeffs, p);
        energies.push(e);
    }
    SpectrumTable::table(family, Method::PartialSum, coeffs, params0, energies)
}

/// Partial-sum spectrum of a validated model.
pub fn spectrum_sum(model: &FamilyModel, n_max: usize) -> SpectrumTable {
    let mut t = spectrum_sum_formal(model.family(), *model.coeffs(), model.params0(), n_max);
    for v in model.waived() {
        t.warnings.push(format!("constraint {v} waived; spectrum is a formal limit"));
    }
    t
}

/// Closed-form level n.
pub fn closed_level(family: Family, k: &FamilyCoeffs, p0: &ParamTriple, n: usize) -> Result<f64> {
    let nf = n as f64;
    let parity = if n % 2 == 0 { 0.0 } else { 2.0 }; // 1 − (−1)ⁿ
    let s = if n % 2 == 0 { 1.0 } else { -1.0 };
    let FamilyCoeffs { a, b, c } = *k;
    let ParamTriple { lambda: l0, sigma: s0, rho: r0 } = *p0;
    match family {
        Family::Ho => Ok(2.0 * a * l0 * nf + l0 * (a + 2.0 * r0) * parity),
        Family::Morse => Ok(nf * (2.0 * b * l0 - 2.0 * a * s0 - a * a * nf) + l0 * (2.0 * r0 + b) * parity),
        Family::PtTrig | Family::PtHyp => Ok((a * r0 + 2.0 * l0 * r0 + c * l0 + 0.5 * a * c) * parity
            - nf * (2.0 * a * r0 + a * c) * s
            + nf * (2.0 * c * l0 + a * c - 2.0 * b * s0)
            + nf * nf * (a * c - b * b)),
        Family::Coulomb => Err(Error::Unsupported(
            "the Coulomb family has its own closed forms (coulomb_spectrum_sum, coulomb_spectrum_nr)".into(),
        )),
    }
}

/// Closed-form spectrum (oscillator, Morse, both Pöschl–Teller families).
pub fn spectrum_closed(model: &FamilyModel, n_max: usize) -> Result<SpectrumTable> {
    spectrum_closed_formal(model.family(), *model.coeffs(), model.params0(), n_max)
}

pub fn spectrum_closed_formal(family: Family, coeffs: FamilyCoeffs, params0: ParamTriple, n_max: usize) -> Result<SpectrumTable> {
    let energies = (0..=n_max).map(|n| closed_level(family, &coeffs, &params0, n)).collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable::table(family, Method::ClosedForm, coeffs, params0, energies))
}

/// The reduced Pöschl–Teller forms for σ = b = 0:
/// trig `[1/2 + λ₀/a + n − (aρ₀ + 1/2)(−1)ⁿ]² − (λ₀/a − aρ₀)²`,
/// hyp `−[1/2 + λ₀/a + n + (aρ₀ − 1/2)(−1)ⁿ]² + (λ₀/a + aρ₀)²`.
///
/// They coincide with the chain sums only when `ac = 1` (trig) or
/// `ac = −1` (hyp); a warning is attached otherwise.
pub fn pt_reduced_spectrum(family: Family, coeffs: FamilyCoeffs, params0: ParamTriple, n_max: usize) -> Result<SpectrumTable> {
    let FamilyCoeffs { a, b, c } = coeffs;
    let (l0, r0) = (params0.lambda, params0.rho);
    let target = match family {
        Family::PtTrig => 1.0,
        Family::PtHyp => -1.0,
        _ => return Err(Error::Unsupported(format!("no reduced Pöschl–Teller form for {family}"))),
    };
    let energies = (0..=n_max)
        .map(|n| {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            let nf = n as f64;
            if family == Family::PtTrig {
                (0.5 + l0 / a + nf - (a * r0 + 0.5) * s).powi(2) - (l0 / a - a * r0).powi(2)
            } else {
                -(0.5 + l0 / a + nf + (a * r0 - 0.5) * s).powi(2) + (l0 / a + a * r0).powi(2)
            }
        })
        .collect();
    let mut t = SpectrumTable::table(family, Method::ClosedForm, coeffs, params0, energies);
    if (a * c - target).abs() > 1e-12 {
        t.warnings.push(format!("reduced form assumes ac = {target}, got ac = {}", a * c));
    }
    if b != 0.0 || params0.sigma != 0.0 {
        t.warnings.push("reduced form assumes σ = b = 0".into());
    }
    Ok(t)
}

/// `E_n = σ₀² − (σ₀ + a n)²`; level n is bound while `n < σ₀/|a|`.
pub fn morse_reduced_spectrum(a: f64, sigma0: f64, n_max: usize) -> Result<SpectrumTable> {
    if !(a < 0.0) || !(sigma0 > 0.0) {
        return Err(Error::InvalidParam(format!("reduced Morse needs a < 0 and σ₀ > 0, got a = {a}, σ₀ = {sigma0}")));
    }
    let ratio = sigma0 / a.abs();
    let levels: Vec<Level> = (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            Level { n, energy: sigma0 * sigma0 - (sigma0 + a * nf).powi(2), bound: nf < ratio }
        })
        .collect();
    let mut t = SpectrumTable {
        family: Family::Morse,
        method: Method::ClosedForm,
        coeffs: FamilyCoeffs::new(a, 0.0, 0.0),
        params0: ParamTriple::new(f64::NAN, sigma0, 0.0),
        levels,
        warnings: Vec::new(),
    };
    if t.levels.iter().any(|l| !l.bound) {
        t.warnings.push(format!("levels with n ≥ σ₀/|a| = {ratio} are not bound"));
    }
    Ok(t)
}

/// Coulomb energy for even N by the closed sum and by explicit summation over even k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoulombSum {
    pub n_big: u32,
    /// ⌊(N−1)/2⌋.
    pub p_max: u32,
    pub closed: f64,
    pub summed: f64,
    /// b = 0: every level collapses to 0 and the family constraint b ≠ 0 fails.
    pub degenerate: bool,
}

pub fn coulomb_spectrum_sum(cp: &CoulombParams, n_big: u32) -> Result<CoulombSum> {
    if n_big == 0 || n_big % 2 != 0 {
        return Err(Error::InvalidParam(format!("N must be a positive even integer, got {n_big}")));
    }
    let p_max = (n_big - 1) / 2;
    let (b, ze2, l1) = (cp.b, cp.ze2(), cp.l1());
    let pf = p_max as f64;
    let closed = -(b / l1) * (1.0 + pf) * (ze2 + b * l1 * pf);
    let mut summed = 0.0;
    for p in 0..=p_max {
        let k = 2.0 * p as f64;
        summed += -(b * b * k + ze2 * b / l1);
    }
    Ok(CoulombSum { n_big, p_max, closed, summed, degenerate: b == 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoulombMode {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoulombLevel {
    pub n_r: u32,
    pub l: u32,
    pub energy: f64,
    /// The level-dependent b that turns the closed sum into these energies.
    pub b_replaced: f64,
    /// F(n_r, l) = n_r² + (l+1)(2n_r+1).
    pub f_value: f64,
    /// F(n_r, l) < Ze²/κ with κ = Ze²/(l+1).
    pub bounded: bool,
}

pub fn coulomb_spectrum_nr(cp: &CoulombParams, n_r: u32, mode: CoulombMode) -> CoulombLevel {
    let (nr, l1, ze2) = (n_r as f64, cp.l1(), cp.ze2());
    let n1 = nr + l1; // n_r + l + 1
    let energy = match mode {
        CoulombMode::Exact => {
            -ze2 * ze2 * (1.0 + nr) * (nr + 2.0 * l1) * (nr * nr + 2.0 * nr + 2.0 * l1 * (nr + 1.0))
                / (4.0 * n1 * n1 * l1 * l1)
        }
        CoulombMode::Asymptotic => {
            let t = ze2 * nr * (nr + 2.0 * l1) / (2.0 * n1 * l1);
            -(t * t) + 0.0
        }
    };
    let kappa = ze2 / l1;
    let f_value = nr * nr + l1 * (2.0 * nr + 1.0);
    CoulombLevel {
        n_r,
        l: cp.l,
        energy,
        b_replaced: ze2 / (2.0 * n1) + ze2 / (2.0 * l1),
        f_value,
        bounded: f_value < ze2 / kappa,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantumNumbers {
    pub n_big: u32,
    pub n_r: u32,
    pub s: u32,
}

/// (n, l) → (N = 2n, n_r = n − l − 1, s = 2l + 1).
///
/// `(N − 1 − s)/2 = n_r` always holds; `⌊(N−1)/2⌋ = n_r` only for l = 0.
pub fn coulomb_quantum_map(n: u32, l: u32) -> Result<QuantumNumbers> {
    if n <= l {
        return Err(Error::InvalidParam(format!("principal quantum number n = {n} must exceed l = {l}")));
    }
    Ok(QuantumNumbers { n_big: 2 * n, n_r: n - l - 1, s: 2 * l + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum(f: Family, k: (f64, f64, f64), p: (f64, f64, f64), n: usize) -> Vec<f64> {
        spectrum_sum_formal(f, FamilyCoeffs::new(k.0, k.1, k.2), ParamTriple::new(p.0, p.1, p.2), n).energies()
    }

    fn closed(f: Family, k: (f64, f64, f64), p: (f64, f64, f64), n: usize) -> Vec<f64> {
        spectrum_closed_formal(f, FamilyCoeffs::new(k.0, k.1, k.2), ParamTriple::new(p.0, p.1, p.2), n)
            .unwrap()
            .energies()
    }

    #[test]
    fn worked_spectra() {
        assert_eq!(sum(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 4), vec![0.0, 4.0, 4.0, 8.0, 8.0]);
        assert_eq!(sum(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), 3), vec![0.0, 8.0, 10.0, 14.0]);
        let pt = sum(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), 2);
        assert_eq!((pt[1], pt[2]), (24.0, 8.0));
        assert_eq!(sum(Family::PtHyp, (1.0, 0.0, -1.0), (2.0, 0.0, 1.0), 0), vec![0.0]);
    }

    #[test]
    fn closed_examples() {
        assert_eq!(closed(Family::Ho, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1)[1], 4.0);
        assert_eq!(closed(Family::Morse, (-1.0, 1.0, 0.0), (1.0, 2.5, 0.0), 2)[2], 10.0);
        let pt = closed(Family::PtTrig, (1.0, 0.0, 1.0), (2.0, 0.0, 1.0), 2);
        assert_eq!((pt[1], pt[2]), (24.0, 8.0));
        let r = pt_reduced_spectrum(Family::PtTrig, FamilyCoeffs::new(1.0, 0.0, 1.0), ParamTriple::new(2.0, 0.0, 1.0), 2).unwrap();
        assert_eq!(r.energies(), vec![0.0, 24.0, 8.0]);
        assert!(r.warnings.iter().any(|w| w.contains("monotone")));
        assert!(spectrum_closed_formal(Family::Coulomb, FamilyCoeffs::default(), ParamTriple::default(), 2).is_err());
    }

    #[test]
    fn reduced_forms_warn_off_their_slice() {
        let r = pt_reduced_spectrum(Family::PtTrig, FamilyCoeffs::new(1.0, 0.0, 2.0), ParamTriple::new(2.0, 0.0, 1.0), 3).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("ac = 1")));
        let r = pt_reduced_spectrum(Family::PtHyp, FamilyCoeffs::new(2.0, 0.0, -0.5), ParamTriple::new(2.0, 0.0, 1.0), 3).unwrap();
        assert!(!r.warnings.iter().any(|w| w.contains("ac =")));
        assert!(pt_reduced_spectrum(Family::Ho, FamilyCoeffs::new(1.0, 0.0, 0.0), ParamTriple::default(), 3).is_err());
    }

    #[test]
    fn morse_reduced() {
        let t = morse_reduced_spectrum(-1.0, 2.5, 3).unwrap();
        assert_eq!(t.energies(), vec![0.0, 4.0, 6.0, 6.0]);
        assert_eq!(t.levels.iter().map(|l| l.bound).collect::<Vec<_>>(), vec![true, true, true, false]);
        let t = morse_reduced_spectrum(-1.0, 0.5, 2).unwrap();
        assert_eq!(t.levels.iter().filter(|l| l.bound).count(), 1);
        assert!(morse_reduced_spectrum(1.0, 2.5, 2).is_err());
        // formal b = 0 chain sum gives the same numbers
        assert_eq!(sum(Family::Morse, (-1.0, 0.0, 0.0), (1.0, 2.5, 0.0), 2), vec![0.0, 4.0, 6.0]);
    }

    #[test]
    fn coulomb_sum_examples() {
        let cp = CoulombParams::new(1.0, 0, 0.75);
        let r = coulomb_spectrum_sum(&cp, 2).unwrap();
        assert_eq!(r.p_max, 0);
        assert_eq!(r.closed, -0.75);
        assert_eq!(r.summed, r.closed);
        let r = coulomb_spectrum_sum(&cp, 4).unwrap();
        assert_eq!(r.closed, r.summed);
        assert_eq!(r.summed, -(0.75 + 0.5625 * 2.0 + 0.75));
        assert!(coulomb_spectrum_sum(&cp, 3).is_err());
        let d = coulomb_spectrum_sum(&CoulombParams::new(1.0, 0, 0.0), 6).unwrap();
        assert!(d.degenerate && d.closed == 0.0);
    }

    #[test]
    fn coulomb_level_examples() {
        let cp = CoulombParams::new(1.0, 0, 0.5);
        assert_eq!(coulomb_spectrum_nr(&cp, 0, CoulombMode::Exact).energy, -1.0);
        for l in 0..6 {
            let cp = CoulombParams::new(1.7, l, 0.5);
            let e = coulomb_spectrum_nr(&cp, 0, CoulombMode::Asymptotic);
            assert_eq!(e.energy, 0.0);
            assert!(!e.bounded);
        }
        let rel = |nr, l| {
            let cp = CoulombParams::new(1.0, l, 0.5);
            let ex = coulomb_spectrum_nr(&cp, nr, CoulombMode::Exact).energy;
            let asy = coulomb_spectrum_nr(&cp, nr, CoulombMode::Asymptotic).energy;
            ((ex - asy) / ex).abs()
        };
        assert!(rel(40, 40) < rel(5, 5));
    }

    #[test]
    fn exact_level_is_closed_sum_with_replaced_b() {
        for l in 0..4 {
            for nr in 0..6 {
                let cp = CoulombParams { z: 1.3, e2: 1.0, l, b: 0.0 };
                let lev = coulomb_spectrum_nr(&cp, nr, CoulombMode::Exact);
                let cp_b = CoulombParams { b: lev.b_replaced, ..cp };
                // N chosen so that ⌊(N−1)/2⌋ = n_r
                let s = coulomb_spectrum_sum(&cp_b, 2 * (nr + 1)).unwrap();
                assert!((s.closed - lev.energy).abs() <= 1e-13 * lev.energy.abs());
            }
        }
    }

    #[test]
    fn asymptotic_matches_bracket_form() {
        for l in 0..5u32 {
            for nr in 0..7u32 {
                let cp = CoulombParams { z: 0.9, e2: 1.2, l, b: 0.3 };
                let lev = coulomb_spectrum_nr(&cp, nr, CoulombMode::Asymptotic);
                let kappa = cp.ze2() / cp.l1();
                let f = nr as f64 * nr as f64 + cp.l1() * (2.0 * nr as f64 + 1.0);
                let bracket = -((cp.ze2() - kappa * f) / (2.0 * (nr as f64 + cp.l1()))).powi(2);
                assert!((lev.energy - bracket).abs() <= 1e-13 * bracket.abs().max(1e-300));
                assert_eq!(lev.f_value, f);
            }
        }
    }

    #[test]
    fn quantum_map() {
        assert_eq!(coulomb_quantum_map(1, 0).unwrap(), QuantumNumbers { n_big: 2, n_r: 0, s: 1 });
        assert_eq!(coulomb_quantum_map(3, 1).unwrap(), QuantumNumbers { n_big: 6, n_r: 1, s: 3 });
        assert!(coulomb_quantum_map(2, 2).is_err());
        for n in 1..10 {
            for l in 0..n {
                let q = coulomb_quantum_map(n, l).unwrap();
                assert_eq!((q.n_big - 1 - q.s) / 2, q.n_r);
                assert_eq!((q.n_big - 1) / 2 == q.n_r, l == 0);
            }
        }
    }

    proptest! {
        #[test]
        fn closed_equals_sum_ho(a in -3.0f64..3.0, l in -3.0f64..3.0, s in -2.0f64..2.0, r in -2.0f64..2.0, b in -1.0f64..1.0) {
            let k = (a, b, 0.0);
            let p = (l, s, r);
            for (x, y) in sum(Family::Ho, k, p, 20).iter().zip(closed(Family::Ho, k, p, 20)) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }

        #[test]
        fn closed_equals_sum_morse(a in -3.0f64..-0.05, b in -2.0f64..2.0, l in -3.0f64..3.0, s in -2.0f64..2.0, r in -2.0f64..2.0) {
            let k = (a, b, 0.0);
            let p = (l, s, r);
            for (x, y) in sum(Family::Morse, k, p, 20).iter().zip(closed(Family::Morse, k, p, 20)) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }

        #[test]
        fn closed_equals_sum_pt(a in -3.0f64..3.0, b in -2.0f64..2.0, c in -3.0f64..3.0, l in -3.0f64..3.0, s in -2.0f64..2.0, r in -2.0f64..2.0) {
            let k = (a, b, c);
            let p = (l, s, r);
            for (x, y) in sum(Family::PtTrig, k, p, 20).iter().zip(closed(Family::PtTrig, k, p, 20)) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }

        #[test]
        fn reduced_pt_on_unit_slice(a in 0.2f64..3.0, l in -3.0f64..3.0, r in -2.0f64..2.0, hyp in proptest::bool::ANY) {
            let (f, c) = if hyp { (Family::PtHyp, -1.0 / a) } else { (Family::PtTrig, 1.0 / a) };
            let k = FamilyCoeffs::new(a, 0.0, c);
            let p = ParamTriple::new(l, 0.0, r);
            let red = pt_reduced_spectrum(f, k, p, 20).unwrap().energies();
            let s = spectrum_sum_formal(f, k, p, 20).energies();
            for (x, y) in s.iter().zip(red) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }

        #[test]
        fn ho_levels_step_by_four_a_lambda(a in 0.1f64..3.0, l in 0.1f64..3.0, r in -2.0f64..2.0) {
            let e = sum(Family::Ho, (a, 0.0, 0.0), (l, 0.0, r), 12);
            for n in 0..10 {
                prop_assert!((e[n + 2] - e[n] - 4.0 * a * l).abs() <= 1e-12 * (1.0 + e[n + 2].abs()));
            }
        }

        #[test]
        fn morse_bound_count(a in -3.0f64..-0.1, s in 0.05f64..10.0) {
            let t = morse_reduced_spectrum(a, s, 200).unwrap();
            let excited = t.levels.iter().filter(|l| l.bound && l.n > 0).count();
            prop_assert_eq!(excited as f64, (s / a.abs()).ceil() - 1.0);
        }
    }
}
