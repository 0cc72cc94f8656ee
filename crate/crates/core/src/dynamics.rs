//! Per-neuron and per-synapse state transitions.
//!
//! The membrane potential is represented as a somatic current. Each synapse
//! carries a first-order low-passed current trace that jumps on presynaptic
//! spikes and decays with its own time constant; compartments sum the traces
//! of their synapses and couple into the soma with factor
//! `alpha / (alpha + leak)`. Fixed feedback synapses inject a current scaled
//! by the distance of the postsynaptic somatic current from a reversal level.
//!
//! All transitions here are pure functions of their inputs so the engine can
//! apply them in any order within a step.

use crate::error::{Error, Result};
use crate::stimulus::SpikeTrain;

/// Compartments a synapse can target. Each couples into the soma with its
/// own coupling factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    Basal,
    Apical,
    Soma,
}

/// One value per compartment. Used both for coupling factors and for the
/// per-step compartment currents.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PerCompartment {
    pub basal: f64,
    pub apical: f64,
    pub soma: f64,
}

impl PerCompartment {
    pub fn splat(value: f64) -> Self {
        PerCompartment {
            basal: value,
            apical: value,
            soma: value,
        }
    }

    pub fn get(&self, c: Compartment) -> f64 {
        match c {
            Compartment::Basal => self.basal,
            Compartment::Apical => self.apical,
            Compartment::Soma => self.soma,
        }
    }

    pub fn get_mut(&mut self, c: Compartment) -> &mut f64 {
        match c {
            Compartment::Basal => &mut self.basal,
            Compartment::Apical => &mut self.apical,
            Compartment::Soma => &mut self.soma,
        }
    }
}

/// Fabricated neuron parameters. Nominal values come from configuration;
/// per-instance values are perturbed by the mismatch model.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronParams {
    /// Membrane time constant, seconds.
    pub tau: f64,
    /// Dimensionless leak factor.
    pub leak: f64,
    /// Coupling factor `alpha` per compartment.
    pub couplings: PerCompartment,
    /// Spike threshold, nA.
    pub i_thr: f64,
    /// Somatic current right after a spike, nA.
    pub i_reset: f64,
    /// Absolute refractory period, seconds.
    pub t_refr: f64,
    /// Noise magnitude, nA per root-second.
    pub sigma: f64,
    /// Synaptic trace time constant, seconds.
    pub tau_syn: f64,
    /// Calcium trace time constant, seconds.
    pub tau_ca: f64,
    /// Calcium increment per spike, dimensionless.
    pub j_ca: f64,
}

impl NeuronParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("{prefix}.{key}"), msg))
            }
        };
        check(self.tau > 0.0, "tau", "must be > 0")?;
        check(self.leak > 0.0, "leak", "must be > 0")?;
        check(self.couplings.basal > 0.0, "alpha_basal", "must be > 0")?;
        check(self.couplings.apical > 0.0, "alpha_apical", "must be > 0")?;
        check(self.couplings.soma > 0.0, "alpha_soma", "must be > 0")?;
        check(self.tau_syn > 0.0, "tau_syn", "must be > 0")?;
        check(self.tau_ca > 0.0, "tau_ca", "must be > 0")?;
        check(self.t_refr >= 0.0, "t_refr", "must be >= 0")?;
        check(self.i_reset >= 0.0, "i_reset", "must be >= 0")?;
        check(
            self.i_thr > self.i_reset,
            "i_thr",
            "must be greater than i_reset",
        )?;
        check(self.sigma >= 0.0, "sigma", "must be >= 0")?;
        check(self.j_ca >= 0.0, "j_ca", "must be >= 0")?;
        Ok(())
    }

    /// Effective coupling of one compartment into the soma.
    pub fn coupling_gain(&self, c: Compartment) -> f64 {
        let alpha = self.couplings.get(c);
        alpha / (alpha + self.leak)
    }
}

/// Mutable per-neuron state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuronState {
    /// Somatic current, nA.
    pub i_soma: f64,
    /// Compartment currents as computed for the current step, nA.
    pub i_comp: PerCompartment,
    /// Apical current split kept for the cancellation rule: summed
    /// conductance feedback and summed inhibition magnitude, nA.
    pub apical_excitation: f64,
    pub apical_inhibition: f64,
    /// Absolute simulation time until which the neuron is refractory.
    pub refr_until: f64,
    /// Low-passed spike count, dimensionless.
    pub calcium: f64,
    pub spiked_this_step: bool,
}

impl NeuronState {
    pub fn is_finite(&self) -> bool {
        self.i_soma.is_finite()
            && self.i_comp.basal.is_finite()
            && self.i_comp.apical.is_finite()
            && self.i_comp.soma.is_finite()
            && self.calcium.is_finite()
    }
}

/// Sign convention for conductance synapses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversalConvention {
    /// `alpha * i_syn * (e_rev - i_soma)`: excitatory input depolarizes
    /// whenever the soma sits below the reversal level.
    DrivingForce,
    /// `alpha * i_syn * (i_soma - e_rev)`.
    Literal,
}

/// Fixed conductance-synapse parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceParams {
    pub alpha: f64,
    /// Reversal level, nA. All potentials are expressed as currents.
    pub e_rev: f64,
    pub convention: ReversalConvention,
}

impl ConductanceParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("{prefix}_alpha"), "must be > 0"))
        }
    }
}

/// One forward-Euler decay step of a synaptic trace. The caller adds
/// `w * i_gain` to the trace before decaying it when the presynaptic
/// neuron spiked.
pub fn decay_synaptic_current(i_syn: f64, dt: f64, tau_syn: f64) -> Result<f64> {
    if !(dt > 0.0) || !(tau_syn > 0.0) {
        return Err(Error::invalid("engine.dt", "dt and tau_syn must be > 0"));
    }
    if dt >= tau_syn {
        return Err(Error::invalid(
            "engine.dt",
            "dt must be smaller than tau_syn for a stable trace update",
        ));
    }
    Ok(i_syn * (1.0 - dt / tau_syn))
}

/// Current a conductance synapse injects into its target compartment.
pub fn conductance_current(i_syn: f64, i_soma: f64, params: &ConductanceParams) -> f64 {
    match params.convention {
        ReversalConvention::DrivingForce => params.alpha * i_syn * (params.e_rev - i_soma),
        ReversalConvention::Literal => params.alpha * i_syn * (i_soma - params.e_rev),
    }
}

/// One somatic integration step.
///
/// Refractory neurons hold the reset current and skip the update. Otherwise
/// the compartment currents couple into the soma, the leak pulls it down and
/// a Gaussian increment `sigma * sqrt(dt) * noise` is added. A threshold
/// crossing emits a spike, resets the soma, starts the refractory clock and
/// bumps the calcium trace. The calcium trace decays every step and the
/// somatic current is clamped at zero.
pub fn step_neuron(
    state: &NeuronState,
    params: &NeuronParams,
    now: f64,
    dt: f64,
    noise: f64,
) -> (NeuronState, bool) {
    let mut next = state.clone();
    let mut spiked = false;
    if now < state.refr_until {
        next.i_soma = params.i_reset;
    } else {
        let drive = params.coupling_gain(Compartment::Basal) * state.i_comp.basal
            + params.coupling_gain(Compartment::Apical) * state.i_comp.apical
            + params.coupling_gain(Compartment::Soma) * state.i_comp.soma;
        next.i_soma += dt / params.tau * (drive - params.leak * state.i_soma)
            + params.sigma * dt.sqrt() * noise;
        if next.i_soma > params.i_thr {
            spiked = true;
            next.i_soma = params.i_reset;
            next.refr_until = now + params.t_refr;
        }
    }
    next.calcium *= 1.0 - dt / params.tau_ca;
    if spiked {
        next.calcium += params.j_ca;
    }
    if next.i_soma < 0.0 {
        next.i_soma = 0.0;
    }
    next.spiked_this_step = spiked;
    (next, spiked)
}

/// Time-average over `[t0, t1]` of the calcium trace obtained by filtering
/// a spike train with `tau_ca` and increment `j_ca`. Computed in closed form
/// per spike; spikes before the window contribute their decayed tail.
pub fn calcium_mean(train: &SpikeTrain, tau_ca: f64, j_ca: f64, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t1 > t0) || t0 < 0.0 {
        return Err(Error::Contract(format!(
            "calcium window must satisfy t1 > t0 >= 0, got ({t0}, {t1})"
        )));
    }
    if !(tau_ca > 0.0) {
        return Err(Error::invalid("neuron.tau_ca", "must be > 0"));
    }
    let mut integral = 0.0;
    for ev in train.events() {
        if ev.t > t1 {
            break;
        }
        let start = ev.t.max(t0);
        let head = ((ev.t - start) / tau_ca).exp();
        let tail = 1.0 - ((start - t1) / tau_ca).exp();
        integral += j_ca * tau_ca * head * tail;
    }
    Ok(integral / (t1 - t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::SpikeEvent;

    fn params() -> NeuronParams {
        NeuronParams {
            tau: 0.01,
            leak: 1.0,
            couplings: PerCompartment::splat(2.0),
            i_thr: 1.0,
            i_reset: 0.0,
            t_refr: 0.001,
            sigma: 0.0,
            tau_syn: 0.01,
            tau_ca: 0.2,
            j_ca: 1.0,
        }
    }

    #[test]
    fn trace_decay_fixed_point_and_step() {
        assert_eq!(decay_synaptic_current(0.0, 1e-4, 0.01).unwrap(), 0.0);
        // 1 nA with dt/tau_syn = 0.01 decays to 0.99 nA in one step.
        let one = decay_synaptic_current(1.0, 1e-4, 0.01).unwrap();
        assert!((one - 0.99).abs() < 1e-15);
        assert!(decay_synaptic_current(1.0, 0.01, 0.01).is_err());
        assert!(decay_synaptic_current(1.0, 0.02, 0.01).is_err());
    }

    #[test]
    fn trace_decay_tracks_analytic_exponential() {
        let tau = 0.01;
        let dt = tau / 1000.0;
        let mut i_syn = 1.0;
        for _ in 0..1000 {
            i_syn = decay_synaptic_current(i_syn, dt, tau).unwrap();
        }
        let exact = (-1.0f64).exp();
        assert!(
            (i_syn - exact).abs() / exact < 0.01,
            "{i_syn} vs {exact}"
        );
    }

    #[test]
    fn conductance_sign_conventions() {
        let literal = ConductanceParams {
            alpha: 0.5,
            e_rev: 3.0,
            convention: ReversalConvention::Literal,
        };
        assert_eq!(conductance_current(2.0, 1.0, &literal), -2.0);
        let driving = ConductanceParams {
            convention: ReversalConvention::DrivingForce,
            ..literal.clone()
        };
        assert_eq!(conductance_current(2.0, 1.0, &driving), 2.0);
        // Exactly zero at the reversal point under either convention.
        assert_eq!(conductance_current(2.0, 3.0, &literal), 0.0);
        assert_eq!(conductance_current(2.0, 3.0, &driving), 0.0);
    }

    #[test]
    fn soma_leak_matches_analytic_exponential() {
        let p = params();
        let dt = p.tau / p.leak / 1000.0;
        let mut state = NeuronState {
            i_soma: 1.0,
            ..Default::default()
        };
        let steps = (p.tau / p.leak / dt).round() as usize;
        let mut now = 0.0;
        for _ in 0..steps {
            let (next, spiked) = step_neuron(&state, &p, now, dt, 0.0);
            assert!(!spiked);
            state = next;
            now += dt;
        }
        let exact = (-1.0f64).exp();
        assert!(
            (state.i_soma - exact).abs() / exact < 0.01,
            "{} vs {exact}",
            state.i_soma
        );
    }

    #[test]
    fn soma_reaches_analytic_fixed_point() {
        // Constant basal current; the fixed point is gain * input / leak.
        let mut p = params();
        p.leak = 0.8;
        p.i_thr = 10.0;
        let input = 1.5;
        let gain = p.coupling_gain(Compartment::Basal);
        let expect = gain * input / p.leak;
        let dt = 1e-4;
        let steps = (10.0 * p.tau / p.leak / dt).ceil() as usize;
        let mut state = NeuronState::default();
        state.i_comp.basal = input;
        let mut now = 0.0;
        for _ in 0..steps {
            let (next, _) = step_neuron(&state, &p, now, dt, 0.0);
            state = next;
            state.i_comp.basal = input;
            now += dt;
        }
        assert!(
            (state.i_soma - expect).abs() / expect < 0.01,
            "{} vs {expect}",
            state.i_soma
        );
    }

    #[test]
    fn threshold_contract() {
        let p = params();
        // Margin large enough to survive one step of leak decay.
        let state = NeuronState {
            i_soma: p.i_thr + 0.02,
            ..Default::default()
        };
        let (next, spiked) = step_neuron(&state, &p, 0.0, 1e-4, 0.0);
        assert!(spiked);
        assert_eq!(next.i_soma, p.i_reset);
        assert_eq!(next.refr_until, p.t_refr);
        assert_eq!(next.calcium, p.j_ca);
        assert!(next.spiked_this_step);
    }

    #[test]
    fn refractory_holds_reset_and_blocks_spikes() {
        let mut p = params();
        p.i_reset = 0.2;
        let dt = 1e-4;
        let mut state = NeuronState::default();
        state.i_comp.basal = 100.0;
        let mut now = 0.0;
        let mut spike_times = Vec::new();
        for _ in 0..200 {
            let (next, spiked) = step_neuron(&state, &p, now, dt, 0.0);
            state = next;
            state.i_comp.basal = 100.0;
            now += dt;
            if spiked {
                spike_times.push(now);
            } else if now < state.refr_until {
                assert_eq!(state.i_soma, p.i_reset);
            }
        }
        assert!(spike_times.len() >= 2);
        for pair in spike_times.windows(2) {
            assert!(pair[1] - pair[0] >= p.t_refr - 1e-9);
        }
    }

    #[test]
    fn soma_clamped_nonnegative() {
        let mut p = params();
        p.sigma = 1.0;
        let state = NeuronState {
            i_soma: 0.1,
            ..Default::default()
        };
        let (next, _) = step_neuron(&state, &p, 0.0, 1e-4, -1e9);
        assert_eq!(next.i_soma, 0.0);
    }

    #[test]
    fn step_neuron_is_deterministic() {
        let p = params();
        let mut state = NeuronState::default();
        state.i_comp.basal = 0.7;
        state.i_soma = 0.3;
        let a = step_neuron(&state, &p, 0.0, 1e-4, 0.123);
        let b = step_neuron(&state, &p, 0.0, 1e-4, 0.123);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn calcium_mean_empty_train_is_zero() {
        let train = SpikeTrain::empty(1);
        assert_eq!(calcium_mean(&train, 0.2, 1.0, (0.0, 1.0)).unwrap(), 0.0);
        assert!(calcium_mean(&train, 0.2, 1.0, (1.0, 1.0)).is_err());
    }

    #[test]
    fn calcium_mean_single_spike_closed_form() {
        let tau = 0.2;
        let j = 1.0;
        let train =
            SpikeTrain::from_events(1, vec![SpikeEvent { t: 0.0, channel: 0 }]).unwrap();
        let mean = calcium_mean(&train, tau, j, (0.0, 5.0 * tau)).unwrap();
        let expect = j / 5.0;
        assert!((mean - expect).abs() / expect < 0.02, "{mean} vs {expect}");
    }

    #[test]
    fn calcium_mean_regular_train_steady_state() {
        let tau = 0.2;
        let j = 1.0;
        let rate = 40.0;
        let events = (0..4000)
            .map(|k| SpikeEvent {
                t: k as f64 / rate,
                channel: 0,
            })
            .collect();
        let train = SpikeTrain::from_events(1, events).unwrap();
        // Average once the filter has settled.
        let window = (20.0 * tau, 4000.0 / rate - 1.0);
        let mean = calcium_mean(&train, tau, j, window).unwrap();
        let expect = j * rate * tau;
        assert!((mean - expect).abs() / expect < 0.05, "{mean} vs {expect}");

        // Independent brute-force grid filter as an oracle.
        let dt = 1e-4;
        let steps = (window.1 / dt) as usize;
        let mut c = 0.0;
        let mut acc = 0.0;
        let mut count = 0u64;
        let mut next_event = 0usize;
        let events = train.events();
        for step in 0..steps {
            let t = (step + 1) as f64 * dt;
            c *= 1.0 - dt / tau;
            while next_event < events.len() && events[next_event].t <= t {
                c += j;
                next_event += 1;
            }
            if t >= window.0 && t <= window.1 {
                acc += c;
                count += 1;
            }
        }
        let brute = acc / count as f64;
        assert!((mean - brute).abs() / brute < 0.02, "{mean} vs {brute}");
    }
}
