use crate::error::{Error, Result};
use crate::hilbert::{inner, State};
use crate::scalar::{c, cr, Cplx, Real};

use super::krylov::Krylov;
use super::{Hamiltonian, Integrator, PropagationConfig, StepStats, Trajectory};

// Gauss–Legendre nodes and the commutator-free weights of the fourth-order
// two-exponential scheme.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const C1: f64 = 0.5 - SQRT3 / 6.0;
const C2: f64 = 0.5 + SQRT3 / 6.0;
const A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

struct Engine<'a, T: Real, H: Hamiltonian<T> + ?Sized> {
    ham: &'a H,
    scheme: Integrator,
    tol: f64,
    krylov: Krylov<T>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    wc: Vec<f64>,
    stats: StepStats,
    // Dormand–Prince stages; k[0] holds f(t, ψ) (first same as last).
    k: Vec<Vec<Cplx<T>>>,
    fsal_valid: bool,
    tmp: Vec<Cplx<T>>,
}

enum Attempt<T> {
    Accepted { state: Vec<Cplx<T>>, factor: f64 },
    Rejected { factor: f64 },
}

impl<'a, T: Real, H: Hamiltonian<T> + ?Sized> Engine<'a, T, H> {
    fn new(ham: &'a H, cfg: &PropagationConfig<T>) -> Self {
        let dim = ham.basis().dim();
        let nt = ham.num_terms();
        let stages = if cfg.integrator == Integrator::DormandPrince {
            7
        } else {
            0
        };
        Engine {
            ham,
            scheme: cfg.integrator,
            tol: cfg.tolerance,
            krylov: Krylov::new(dim, cfg.krylov_dim),
            w1: vec![0.0; nt],
            w2: vec![0.0; nt],
            wc: vec![0.0; nt],
            stats: StepStats::default(),
            k: vec![vec![Cplx::default(); dim]; stages],
            fsal_valid: false,
            tmp: vec![Cplx::default(); dim],
        }
    }

    fn order(&self) -> f64 {
        match self.scheme {
            Integrator::Magnus4 | Integrator::DormandPrince => 4.0,
            Integrator::Magnus2 => 2.0,
        }
    }

    /// `x ← exp(−i h Σ w_k H_k) x`; `false` if the Krylov space was too small.
    fn exp_weighted(&mut self, w: &[f64], h: f64, x: &mut [Cplx<T>], tol: f64) -> bool {
        let ham = self.ham;
        let one = cr(T::one());
        match self
            .krylov
            .expv(|v, out| ham.apply_weighted(w, one, v, out), h, x, tol)
        {
            Ok(m) => {
                self.stats.matvecs += m;
                true
            }
            Err(f) => {
                self.stats.matvecs += f.matvecs;
                false
            }
        }
    }

    fn magnus(&mut self, t: f64, h: f64, x: &mut [Cplx<T>], ktol: f64) -> bool {
        match self.scheme {
            Integrator::Magnus2 => {
                let mut w = std::mem::take(&mut self.w1);
                self.ham.weights(t + 0.5 * h, &mut w);
                let ok = self.exp_weighted(&w, h, x, ktol);
                self.w1 = w;
                ok
            }
            _ => {
                let (mut w1, mut w2, mut wc) = (
                    std::mem::take(&mut self.w1),
                    std::mem::take(&mut self.w2),
                    std::mem::take(&mut self.wc),
                );
                self.ham.weights(t + C1 * h, &mut w1);
                self.ham.weights(t + C2 * h, &mut w2);
                for ((c, a), b) in wc.iter_mut().zip(&w1).zip(&w2) {
                    *c = A2 * a + A1 * b;
                }
                let mut ok = self.exp_weighted(&wc, h, x, ktol);
                if ok {
                    for ((c, a), b) in wc.iter_mut().zip(&w1).zip(&w2) {
                        *c = A1 * a + A2 * b;
                    }
                    ok = self.exp_weighted(&wc, h, x, ktol);
                }
                self.w1 = w1;
                self.w2 = w2;
                self.wc = wc;
                ok
            }
        }
    }

    /// Step doubling: one step of `h` against two of `h/2`.
    fn attempt_magnus(&mut self, t: f64, h: f64, psi: &[Cplx<T>]) -> Attempt<T> {
        let p = self.order();
        let ktol = 0.02 * self.tol * h;
        let mut full = psi.to_vec();
        let mut half = psi.to_vec();
        let ok = self.magnus(t, h, &mut full, ktol)
            && self.magnus(t, 0.5 * h, &mut half, ktol)
            && self.magnus(t + 0.5 * h, 0.5 * h, &mut half, ktol);
        if !ok {
            return Attempt::Rejected { factor: 0.5 };
        }
        let err = diff_norm(&full, &half) / (2f64.powf(p) - 1.0);
        self.decide(err, h, half)
    }

    fn decide(&self, err: f64, h: f64, state: Vec<Cplx<T>>) -> Attempt<T> {
        // Rounding in the state update sets a floor no step size can beat.
        let budget = (self.tol * h).max(64.0 * T::epsilon().as_f64());
        let ratio = if err > 0.0 {
            budget / err
        } else {
            f64::INFINITY
        };
        let factor = (0.9 * ratio.powf(1.0 / self.order())).clamp(0.2, 4.0);
        if err <= budget {
            Attempt::Accepted { state, factor }
        } else {
            Attempt::Rejected {
                factor: factor.min(0.9),
            }
        }
    }

    fn rhs(&self, t: f64, x: &[Cplx<T>], out: &mut [Cplx<T>], w: &mut [f64]) {
        self.ham.weights(t, w);
        self.ham.apply_weighted(w, c(T::zero(), -T::one()), x, out);
    }

    fn attempt_dp5(&mut self, t: f64, h: f64, psi: &[Cplx<T>]) -> Attempt<T> {
        let mut w = std::mem::take(&mut self.w1);
        let mut k = std::mem::take(&mut self.k);
        if !self.fsal_valid {
            self.rhs(t, psi, &mut k[0], &mut w);
            self.stats.matvecs += 1;
        }
        let n = psi.len();
        for s in 1..7 {
            let ts = t + DP_C[s] * h;
            for i in 0..n {
                let mut acc = psi[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        acc += kj[i] * cr(T::lit(h * a));
                    }
                }
                self.tmp[i] = acc;
            }
            self.rhs(ts, &self.tmp, &mut k[s], &mut w);
            self.stats.matvecs += 1;
        }
        // Stage 7 was evaluated at the fifth-order solution (stored in tmp).
        let mut err2 = 0.0f64;
        for i in 0..n {
            let mut e: Cplx<T> = Cplx::default();
            for (s, ks) in k.iter().enumerate() {
                e += ks[i] * cr(T::lit(h * (DP_B[s] - DP_BHAT[s])));
            }
            err2 += (e.re * e.re + e.im * e.im).as_f64();
        }
        let state = self.tmp.clone();
        let out = self.decide(err2.sqrt(), h, state);
        // k[0] stays valid after a rejection; after acceptance the last
        // stage is f at the new point.
        if matches!(out, Attempt::Accepted { .. }) {
            k.swap(0, 6);
        }
        self.fsal_valid = true;
        self.k = k;
        self.w1 = w;
        out
    }

    fn attempt(&mut self, t: f64, h: f64, psi: &[Cplx<T>]) -> Attempt<T> {
        match self.scheme {
            Integrator::DormandPrince => self.attempt_dp5(t, h, psi),
            _ => self.attempt_magnus(t, h, psi),
        }
    }
}

fn diff_norm<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y).norm_sqr().as_f64())
        .sum::<f64>()
        .sqrt()
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_BHAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Recorder<'c, T: Real> {
    cfg: &'c PropagationConfig<T>,
    buf: Vec<Cplx<T>>,
    traj_times: Vec<f64>,
    values: Vec<Vec<f64>>,
    imag: Vec<f64>,
    norm_errors: Vec<f64>,
    states: Vec<State<T>>,
}

impl<'c, T: Real> Recorder<'c, T> {
    fn record(&mut self, t: f64, psi: &State<T>) -> Result<()> {
        let nerr = (psi.norm().as_f64() - 1.0).abs();
        if nerr > self.cfg.norm_limit {
            return Err(Error::NormDrift {
                t,
                drift: nerr,
                limit: self.cfg.norm_limit,
            });
        }
        if let Some(limit) = self.cfg.truncation_limit {
            for mode in 0..psi.basis().num_modes() {
                let pop = psi.top_population(mode, 2)?.as_f64();
                if pop > limit {
                    return Err(Error::TruncationOverflow {
                        t,
                        mode,
                        population: pop,
                    });
                }
            }
        }
        let amps = psi.amplitudes();
        let mut row = Vec::with_capacity(self.cfg.observables.len());
        for (k, (_, op)) in self.cfg.observables.iter().enumerate() {
            self.buf.iter_mut().for_each(|v| *v = Cplx::default());
            op.apply_add(cr(T::one()), amps, &mut self.buf);
            let e = inner(amps, &self.buf);
            row.push(e.re.as_f64());
            self.imag[k] = self.imag[k].max(e.im.as_f64().abs());
        }
        self.traj_times.push(t);
        self.values.push(row);
        self.norm_errors.push(nerr);
        if self.cfg.keep_states {
            self.states.push(psi.clone());
        }
        Ok(())
    }
}

pub(super) fn run<T: Real, H: Hamiltonian<T> + ?Sized>(
    ham: &H,
    psi0: &State<T>,
    cfg: &PropagationConfig<T>,
) -> Result<Trajectory<T>> {
    let basis = psi0.basis().clone();
    let mut rec = Recorder {
        cfg,
        buf: vec![Cplx::default(); basis.dim()],
        traj_times: Vec::with_capacity(cfg.record_points),
        values: Vec::with_capacity(cfg.record_points),
        imag: vec![0.0; cfg.observables.len()],
        norm_errors: Vec::with_capacity(cfg.record_points),
        states: Vec::new(),
    };
    let mut engine = Engine::new(ham, cfg);
    let mut psi = psi0.clone();
    rec.record(0.0, &psi)?;

    let n = cfg.record_points;
    let spacing = cfg.t_final / (n - 1) as f64;
    let mut h = spacing.min(cfg.max_step);
    let mut t = 0.0;
    for k in 1..n {
        let target = if k == n - 1 {
            cfg.t_final
        } else {
            cfg.t_final * k as f64 / (n - 1) as f64
        };
        while t < target {
            let remaining = target - t;
            // Avoid leaving a sliver behind before the output time.
            let clipped = h >= remaining || remaining - h < 1e-3 * h;
            let step = if clipped { remaining } else { h };
            match engine.attempt(t, step, psi.amplitudes()) {
                Attempt::Accepted { state, factor } => {
                    psi = State::new(basis.clone(), state)?;
                    t = if clipped { target } else { t + step };
                    engine.stats.accepted += 1;
                    // A step shortened to hit an output time says little
                    // about the natural step size.
                    h = if clipped {
                        h.max(step * factor)
                    } else {
                        step * factor
                    };
                }
                Attempt::Rejected { factor } => {
                    engine.stats.rejected += 1;
                    h = step * factor;
                }
            }
            h = h.min(cfg.max_step);
            if h < cfg.min_step {
                return Err(Error::StepUnderflow {
                    t,
                    step: h,
                    min_step: cfg.min_step,
                });
            }
        }
        rec.record(t, &psi)?;
    }
    let norm_drift = rec.norm_errors.iter().copied().fold(0.0, f64::max);
    Ok(Trajectory {
        times: rec.traj_times,
        labels: cfg.observables.iter().map(|(l, _)| l.clone()).collect(),
        values: rec.values,
        imag_residuals: rec.imag,
        norm_errors: rec.norm_errors,
        final_state: psi,
        states: rec.states,
        norm_drift,
        stats: engine.stats,
    })
}

/// Fixed-step Magnus propagation, for order checks.
#[cfg(test)]
pub(super) fn fixed_magnus<T: Real, H: Hamiltonian<T> + ?Sized>(
    ham: &H,
    psi0: &[Cplx<T>],
    t_final: f64,
    steps: usize,
    scheme: Integrator,
) -> Vec<Cplx<T>> {
    let cfg = PropagationConfig::<T>::new(t_final)
        .with_integrator(scheme)
        .with_tolerance(1e-14);
    let mut engine = Engine::new(ham, &cfg);
    let mut psi = psi0.to_vec();
    let h = t_final / steps as f64;
    for s in 0..steps {
        assert!(engine.magnus(s as f64 * h, h, &mut psi, 1e-15));
    }
    psi
}
