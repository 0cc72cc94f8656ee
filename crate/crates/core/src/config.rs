//! Flat `section.key = value` configuration with `#` comments.
//!
//! Every key has a default; unknown keys are rejected with their line
//! number. Seeds not set explicitly derive from `engine.seed` so one base
//! seed pins wiring, mismatch, patterns and noise at once.

use std::collections::HashMap;

use crate::dynamics::{NeuronParams, PerCompartment, ReversalConvention};
use crate::engine::{EngineConfig, RecordFlags};
use crate::error::{Error, Result};
use crate::fabric::{
    ArchitectureSpec, ConductanceNominal, MismatchConfig, Nominals, PlasticityNominal,
};
use crate::plasticity::{RuleForm, Trigger};
use crate::stimulus::{PatternSpec, SpikeTrain};

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSection {
    pub n_inputs: usize,
    pub n_pyramidal: usize,
    pub n_inter: usize,
    pub n_readout: usize,
    pub sparsity: f64,
    pub w_init_low: f64,
    pub w_init_high: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynapseSection {
    pub input_to_pyr_gain: f64,
    pub pyr_to_inter_gain: f64,
    pub pyr_to_readout_gain: f64,
    pub readout_to_pyr_gain: f64,
    pub inter_to_pyr_gain: f64,
    pub readout_to_inter_gain: f64,
    pub teacher_to_readout_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlasticitySection {
    pub input_to_pyr_eta: f64,
    pub input_to_pyr_theta: f64,
    pub pyr_to_inter_eta: f64,
    pub pyr_to_inter_theta: f64,
    pub pyr_to_readout_eta: f64,
    pub pyr_to_readout_theta: f64,
    pub inter_to_pyr_eta: f64,
    pub inter_to_pyr_theta: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub rule: RuleForm,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceSection {
    pub readout_to_pyr_w: f64,
    pub readout_to_pyr_alpha: f64,
    pub readout_to_pyr_e_rev: f64,
    pub readout_to_inter_w: f64,
    pub readout_to_inter_alpha: f64,
    pub readout_to_inter_e_rev: f64,
    pub teacher_to_readout_w: f64,
    pub teacher_to_readout_alpha: f64,
    pub teacher_to_readout_e_rev: f64,
    pub convention: ReversalConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchSection {
    pub cv: f64,
    pub floor: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeacherKind {
    Regular,
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSection {
    pub channels: usize,
    pub duration: f64,
    pub n_spikes: usize,
    pub periodic: bool,
    pub seed: u64,
    pub alt_seed: u64,
    pub teacher_rate: f64,
    pub teacher_kind: TeacherKind,
    pub teacher_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineSection {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub learning: bool,
    pub teacher: bool,
    pub record_spikes: bool,
    pub record_calcium: bool,
    pub record_weights: bool,
    pub record_compartments: bool,
    pub calcium_sample_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub baseline_duration: f64,
    pub training_duration: f64,
    pub test_duration: f64,
    pub silence_duration: f64,
    /// Discrimination only: the per-pattern training time is split into this
    /// many alternating blocks so neither readout sits unused for long.
    pub training_blocks: usize,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub architecture: ArchitectureSection,
    pub neuron: NeuronParams,
    pub synapse: SynapseSection,
    pub plasticity: PlasticitySection,
    pub conductance: ConductanceSection,
    pub mismatch: MismatchSection,
    pub stimulus: StimulusSection,
    pub engine: EngineSection,
    pub experiment: ExperimentSection,
}

const BASE_SEED: u64 = 42;

impl RunConfig {
    /// Defaults for the single-readout recognition task.
    pub fn recognition_defaults() -> Self {
        let base = BASE_SEED;
        RunConfig {
            architecture: ArchitectureSection {
                n_inputs: 32,
                n_pyramidal: 2,
                n_inter: 1,
                n_readout: 1,
                sparsity: 1.0,
                w_init_low: 0.08,
                w_init_high: 0.16,
                seed: base + 1,
            },
            neuron: NeuronParams {
                tau: 0.003,
                leak: 0.55,
                couplings: PerCompartment {
                    basal: 3.0,
                    apical: 1.0,
                    soma: 3.0,
                },
                i_thr: 1.0,
                i_reset: 0.9,
                t_refr: 0.001,
                sigma: 0.01,
                tau_syn: 0.005,
                tau_ca: 0.2,
                j_ca: 1.0,
            },
            synapse: SynapseSection {
                input_to_pyr_gain: 1.0,
                pyr_to_inter_gain: 1.0,
                pyr_to_readout_gain: 1.0,
                readout_to_pyr_gain: 1.0,
                inter_to_pyr_gain: 0.05,
                readout_to_inter_gain: 1.0,
                teacher_to_readout_gain: 1.0,
            },
            plasticity: PlasticitySection {
                input_to_pyr_eta: 0.8,
                input_to_pyr_theta: 0.2,
                pyr_to_inter_eta: 0.15,
                pyr_to_inter_theta: 0.04,
                pyr_to_readout_eta: 0.15,
                pyr_to_readout_theta: 0.05,
                inter_to_pyr_eta: 0.002,
                inter_to_pyr_theta: 0.00006,
                w_min: 0.0,
                w_max: f64::INFINITY,
                rule: RuleForm::Literal,
                trigger: Trigger::PresynSpike,
            },
            conductance: ConductanceSection {
                readout_to_pyr_w: 1.0,
                readout_to_pyr_alpha: 0.02,
                readout_to_pyr_e_rev: 3.0,
                readout_to_inter_w: 1.0,
                readout_to_inter_alpha: 0.4,
                readout_to_inter_e_rev: 3.0,
                teacher_to_readout_w: 1.0,
                teacher_to_readout_alpha: 0.4,
                teacher_to_readout_e_rev: 3.0,
                convention: ReversalConvention::DrivingForce,
            },
            mismatch: MismatchSection {
                cv: 0.2,
                floor: 0.05,
                seed: base + 2,
            },
            stimulus: StimulusSection {
                channels: 32,
                duration: 0.2,
                n_spikes: 128,
                periodic: true,
                seed: base + 3,
                alt_seed: base + 4,
                teacher_rate: 900.0,
                teacher_kind: TeacherKind::Regular,
                teacher_seed: base + 5,
            },
            engine: EngineSection {
                dt: 1e-4,
                duration: 2.0,
                seed: base,
                learning: false,
                teacher: false,
                record_spikes: true,
                record_calcium: true,
                record_weights: true,
                record_compartments: true,
                calcium_sample_every: 10,
            },
            experiment: ExperimentSection {
                baseline_duration: 2.0,
                training_duration: 5.0,
                test_duration: 6.0,
                silence_duration: 1.0,
                training_blocks: 1,
            },
        }
    }

    /// Defaults for the two-readout discrimination task: a wider hidden
    /// layer wired at 50% connection probability.
    pub fn discrimination_defaults() -> Self {
        let mut cfg = Self::recognition_defaults();
        cfg.architecture.n_pyramidal = 8;
        cfg.architecture.n_inter = 2;
        cfg.architecture.n_readout = 2;
        cfg.architecture.sparsity = 0.5;
        cfg
    }

    /// Shifts every seed by `offset`, for seed sweeps.
    pub fn with_seed_offset(&self, offset: u64) -> Self {
        let mut cfg = self.clone();
        cfg.engine.seed = cfg.engine.seed.wrapping_add(offset);
        cfg.architecture.seed = cfg.architecture.seed.wrapping_add(offset);
        cfg.mismatch.seed = cfg.mismatch.seed.wrapping_add(offset);
        cfg.stimulus.seed = cfg.stimulus.seed.wrapping_add(offset);
        cfg.stimulus.alt_seed = cfg.stimulus.alt_seed.wrapping_add(offset);
        cfg.stimulus.teacher_seed = cfg.stimulus.teacher_seed.wrapping_add(offset);
        cfg
    }

    pub fn architecture(&self) -> ArchitectureSpec {
        ArchitectureSpec {
            n_inputs: self.architecture.n_inputs,
            n_pyramidal: self.architecture.n_pyramidal,
            n_inter: self.architecture.n_inter,
            n_readout: self.architecture.n_readout,
            sparsity: self.architecture.sparsity,
            w_init_low: self.architecture.w_init_low,
            w_init_high: self.architecture.w_init_high,
            seed: self.architecture.seed,
        }
    }

    pub fn mismatch(&self) -> MismatchConfig {
        MismatchConfig {
            cv: self.mismatch.cv,
            floor: self.mismatch.floor,
            seed: self.mismatch.seed,
        }
    }

    pub fn pattern_spec(&self) -> PatternSpec {
        PatternSpec {
            channels: self.stimulus.channels,
            duration: self.stimulus.duration,
            n_spikes: self.stimulus.n_spikes,
            seed: self.stimulus.seed,
            periodic: self.stimulus.periodic,
            grid: self.engine.dt,
        }
    }

    /// Single-channel teacher train over `duration`.
    pub fn teacher_train(&self, duration: f64) -> Result<SpikeTrain> {
        match self.stimulus.teacher_kind {
            TeacherKind::Regular => {
                crate::stimulus::generate_teacher(self.stimulus.teacher_rate, duration)
            }
            TeacherKind::Poisson => crate::stimulus::generate_teacher_poisson(
                self.stimulus.teacher_rate,
                duration,
                self.stimulus.teacher_seed,
            ),
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            dt: self.engine.dt,
            duration: self.engine.duration,
            seed: self.engine.seed,
            flags: RecordFlags {
                spikes: self.engine.record_spikes,
                calcium: self.engine.record_calcium,
                weights: self.engine.record_weights,
                compartments: self.engine.record_compartments,
            },
            calcium_sample_every: self.engine.calcium_sample_every,
        }
    }

    pub fn nominals(&self) -> Nominals {
        let p = &self.plasticity;
        let c = &self.conductance;
        Nominals {
            neuron: self.neuron.clone(),
            gain_input_to_pyr: self.synapse.input_to_pyr_gain,
            gain_pyr_to_inter: self.synapse.pyr_to_inter_gain,
            gain_pyr_to_readout: self.synapse.pyr_to_readout_gain,
            gain_readout_to_pyr: self.synapse.readout_to_pyr_gain,
            gain_inter_to_pyr: self.synapse.inter_to_pyr_gain,
            gain_readout_to_inter: self.synapse.readout_to_inter_gain,
            gain_teacher_to_readout: self.synapse.teacher_to_readout_gain,
            plastic_input_to_pyr: PlasticityNominal {
                eta: p.input_to_pyr_eta,
                theta: p.input_to_pyr_theta,
            },
            plastic_pyr_to_inter: PlasticityNominal {
                eta: p.pyr_to_inter_eta,
                theta: p.pyr_to_inter_theta,
            },
            plastic_pyr_to_readout: PlasticityNominal {
                eta: p.pyr_to_readout_eta,
                theta: p.pyr_to_readout_theta,
            },
            plastic_inter_to_pyr: PlasticityNominal {
                eta: p.inter_to_pyr_eta,
                theta: p.inter_to_pyr_theta,
            },
            w_min: p.w_min,
            w_max: p.w_max,
            trigger: p.trigger,
            form: p.rule,
            fixed_readout_to_pyr: ConductanceNominal {
                w: c.readout_to_pyr_w,
                alpha: c.readout_to_pyr_alpha,
                e_rev: c.readout_to_pyr_e_rev,
            },
            fixed_readout_to_inter: ConductanceNominal {
                w: c.readout_to_inter_w,
                alpha: c.readout_to_inter_alpha,
                e_rev: c.readout_to_inter_e_rev,
            },
            fixed_teacher_to_readout: ConductanceNominal {
                w: c.teacher_to_readout_w,
                alpha: c.teacher_to_readout_alpha,
                e_rev: c.teacher_to_readout_e_rev,
            },
            convention: c.convention,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture().validate()?;
        self.neuron.validate("neuron")?;
        self.mismatch().validate()?;
        self.engine_config().validate()?;
        if !(self.engine.dt > 0.0) {
            return Err(Error::invalid("engine.dt", "must be > 0"));
        }
        if self.stimulus.channels != self.architecture.n_inputs {
            return Err(Error::invalid(
                "stimulus.channels",
                "must match architecture.n_inputs",
            ));
        }
        self.pattern_spec().validate()?;
        if !(self.stimulus.teacher_rate >= 0.0) {
            return Err(Error::invalid("stimulus.teacher_rate", "must be >= 0"));
        }
        for (key, value) in [
            ("experiment.baseline_duration", self.experiment.baseline_duration),
            ("experiment.training_duration", self.experiment.training_duration),
            ("experiment.test_duration", self.experiment.test_duration),
            ("experiment.silence_duration", self.experiment.silence_duration),
            ("engine.duration", self.engine.duration),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::invalid(key, "must be a finite duration >= 0"));
            }
        }
        for (key, value) in [
            ("plasticity.input_to_pyr_eta", self.plasticity.input_to_pyr_eta),
            ("plasticity.pyr_to_inter_eta", self.plasticity.pyr_to_inter_eta),
            (
                "plasticity.pyr_to_readout_eta",
                self.plasticity.pyr_to_readout_eta,
            ),
            ("plasticity.inter_to_pyr_eta", self.plasticity.inter_to_pyr_eta),
        ] {
            if !(value > 0.0) {
                return Err(Error::invalid(key, "must be > 0"));
            }
        }
        for (key, value) in [
            (
                "plasticity.input_to_pyr_theta",
                self.plasticity.input_to_pyr_theta,
            ),
            (
                "plasticity.pyr_to_inter_theta",
                self.plasticity.pyr_to_inter_theta,
            ),
            (
                "plasticity.pyr_to_readout_theta",
                self.plasticity.pyr_to_readout_theta,
            ),
            (
                "plasticity.inter_to_pyr_theta",
                self.plasticity.inter_to_pyr_theta,
            ),
        ] {
            if !(value >= 0.0) {
                return Err(Error::invalid(key, "must be >= 0"));
            }
        }
        if !(self.plasticity.w_min < self.plasticity.w_max) {
            return Err(Error::invalid(
                "plasticity.w_min",
                "must be below plasticity.w_max",
            ));
        }
        for (key, value) in [
            ("conductance.readout_to_pyr_alpha", self.conductance.readout_to_pyr_alpha),
            (
                "conductance.readout_to_inter_alpha",
                self.conductance.readout_to_inter_alpha,
            ),
            (
                "conductance.teacher_to_readout_alpha",
                self.conductance.teacher_to_readout_alpha,
            ),
        ] {
            if !(value > 0.0) {
                return Err(Error::invalid(key, "must be > 0"));
            }
        }
        for (key, value) in [
            ("synapse.input_to_pyr_gain", self.synapse.input_to_pyr_gain),
            ("synapse.pyr_to_inter_gain", self.synapse.pyr_to_inter_gain),
            ("synapse.pyr_to_readout_gain", self.synapse.pyr_to_readout_gain),
            ("synapse.readout_to_pyr_gain", self.synapse.readout_to_pyr_gain),
            ("synapse.inter_to_pyr_gain", self.synapse.inter_to_pyr_gain),
            ("synapse.readout_to_inter_gain", self.synapse.readout_to_inter_gain),
            (
                "synapse.teacher_to_readout_gain",
                self.synapse.teacher_to_readout_gain,
            ),
        ] {
            if !(value > 0.0) {
                return Err(Error::invalid(key, "must be > 0"));
            }
        }
        Ok(())
    }

    /// Canonical serialization; parsing it back reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        let f = |v: f64| format!("{v:?}");
        let a = &self.architecture;
        push("architecture.n_inputs", a.n_inputs.to_string());
        push("architecture.n_pyramidal", a.n_pyramidal.to_string());
        push("architecture.n_inter", a.n_inter.to_string());
        push("architecture.n_readout", a.n_readout.to_string());
        push("architecture.sparsity", f(a.sparsity));
        push("architecture.w_init_low", f(a.w_init_low));
        push("architecture.w_init_high", f(a.w_init_high));
        push("architecture.seed", a.seed.to_string());
        let n = &self.neuron;
        push("neuron.tau", f(n.tau));
        push("neuron.leak", f(n.leak));
        push("neuron.alpha_basal", f(n.couplings.basal));
        push("neuron.alpha_apical", f(n.couplings.apical));
        push("neuron.alpha_soma", f(n.couplings.soma));
        push("neuron.i_thr", f(n.i_thr));
        push("neuron.i_reset", f(n.i_reset));
        push("neuron.t_refr", f(n.t_refr));
        push("neuron.sigma", f(n.sigma));
        push("neuron.tau_syn", f(n.tau_syn));
        push("neuron.tau_ca", f(n.tau_ca));
        push("neuron.j_ca", f(n.j_ca));
        let s = &self.synapse;
        push("synapse.input_to_pyr_gain", f(s.input_to_pyr_gain));
        push("synapse.pyr_to_inter_gain", f(s.pyr_to_inter_gain));
        push("synapse.pyr_to_readout_gain", f(s.pyr_to_readout_gain));
        push("synapse.readout_to_pyr_gain", f(s.readout_to_pyr_gain));
        push("synapse.inter_to_pyr_gain", f(s.inter_to_pyr_gain));
        push("synapse.readout_to_inter_gain", f(s.readout_to_inter_gain));
        push("synapse.teacher_to_readout_gain", f(s.teacher_to_readout_gain));
        let p = &self.plasticity;
        push("plasticity.input_to_pyr_eta", f(p.input_to_pyr_eta));
        push("plasticity.input_to_pyr_theta", f(p.input_to_pyr_theta));
        push("plasticity.pyr_to_inter_eta", f(p.pyr_to_inter_eta));
        push("plasticity.pyr_to_inter_theta", f(p.pyr_to_inter_theta));
        push("plasticity.pyr_to_readout_eta", f(p.pyr_to_readout_eta));
        push("plasticity.pyr_to_readout_theta", f(p.pyr_to_readout_theta));
        push("plasticity.inter_to_pyr_eta", f(p.inter_to_pyr_eta));
        push("plasticity.inter_to_pyr_theta", f(p.inter_to_pyr_theta));
        push("plasticity.w_min", f(p.w_min));
        push("plasticity.w_max", f(p.w_max));
        push(
            "plasticity.rule",
            match p.rule {
                RuleForm::Literal => "literal".to_string(),
                RuleForm::Shifted => "shifted".to_string(),
            },
        );
        match p.trigger {
            Trigger::PresynSpike => {
                push("plasticity.trigger", "presyn_spike".to_string());
                push("plasticity.periodic_every", 10.to_string());
            }
            Trigger::Periodic { every } => {
                push("plasticity.trigger", "periodic".to_string());
                push("plasticity.periodic_every", every.to_string());
            }
        }
        let c = &self.conductance;
        push("conductance.readout_to_pyr_w", f(c.readout_to_pyr_w));
        push("conductance.readout_to_pyr_alpha", f(c.readout_to_pyr_alpha));
        push("conductance.readout_to_pyr_e_rev", f(c.readout_to_pyr_e_rev));
        push("conductance.readout_to_inter_w", f(c.readout_to_inter_w));
        push("conductance.readout_to_inter_alpha", f(c.readout_to_inter_alpha));
        push("conductance.readout_to_inter_e_rev", f(c.readout_to_inter_e_rev));
        push("conductance.teacher_to_readout_w", f(c.teacher_to_readout_w));
        push(
            "conductance.teacher_to_readout_alpha",
            f(c.teacher_to_readout_alpha),
        );
        push(
            "conductance.teacher_to_readout_e_rev",
            f(c.teacher_to_readout_e_rev),
        );
        push(
            "conductance.convention",
            match c.convention {
                ReversalConvention::DrivingForce => "driving_force".to_string(),
                ReversalConvention::Literal => "literal".to_string(),
            },
        );
        let m = &self.mismatch;
        push("mismatch.cv", f(m.cv));
        push("mismatch.floor", f(m.floor));
        push("mismatch.seed", m.seed.to_string());
        let st = &self.stimulus;
        push("stimulus.channels", st.channels.to_string());
        push("stimulus.duration", f(st.duration));
        push("stimulus.n_spikes", st.n_spikes.to_string());
        push("stimulus.periodic", st.periodic.to_string());
        push("stimulus.seed", st.seed.to_string());
        push("stimulus.alt_seed", st.alt_seed.to_string());
        push("stimulus.teacher_rate", f(st.teacher_rate));
        push(
            "stimulus.teacher_kind",
            match st.teacher_kind {
                TeacherKind::Regular => "regular".to_string(),
                TeacherKind::Poisson => "poisson".to_string(),
            },
        );
        push("stimulus.teacher_seed", st.teacher_seed.to_string());
        let e = &self.engine;
        push("engine.dt", f(e.dt));
        push("engine.duration", f(e.duration));
        push("engine.seed", e.seed.to_string());
        push("engine.learning", e.learning.to_string());
        push("engine.teacher", e.teacher.to_string());
        push("engine.record_spikes", e.record_spikes.to_string());
        push("engine.record_calcium", e.record_calcium.to_string());
        push("engine.record_weights", e.record_weights.to_string());
        push("engine.record_compartments", e.record_compartments.to_string());
        push(
            "engine.calcium_sample_every",
            e.calcium_sample_every.to_string(),
        );
        let x = &self.experiment;
        push("experiment.baseline_duration", f(x.baseline_duration));
        push("experiment.training_duration", f(x.training_duration));
        push("experiment.test_duration", f(x.test_duration));
        push("experiment.silence_duration", f(x.silence_duration));
        push("experiment.training_blocks", x.training_blocks.to_string());
        out
    }
}

struct Raw {
    entries: HashMap<String, (String, usize)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config {
                    line: lineno,
                    message: "expected `section.key = value`".to_string(),
                });
            };
            let key = key.trim().to_string();
            if !key.contains('.') {
                return Err(Error::Config {
                    line: lineno,
                    message: format!("key `{key}` is missing its section prefix"),
                });
            }
            if entries
                .insert(key.clone(), (value.trim().to_string(), lineno))
                .is_some()
            {
                return Err(Error::Config {
                    line: lineno,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Raw { entries })
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| Error::Config {
                line,
                message: format!("{key}: expected a number, got `{v}`"),
            }),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| Error::Config {
                line,
                message: format!("{key}: expected a non-negative integer, got `{v}`"),
            }),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| Error::Config {
                line,
                message: format!("{key}: expected a non-negative integer, got `{v}`"),
            }),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::Config {
                    line,
                    message: format!("{key}: expected true or false, got `{v}`"),
                }),
            },
        }
    }

    fn token(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some((v, line)) => {
                if allowed.contains(&v.as_str()) {
                    Ok(v)
                } else {
                    Err(Error::Config {
                        line,
                        message: format!("{key}: expected one of {allowed:?}, got `{v}`"),
                    })
                }
            }
        }
    }

    fn finish(self) -> Result<()> {
        let mut unknown: Vec<(usize, String)> = self
            .entries
            .into_iter()
            .map(|(k, (_, line))| (line, k))
            .collect();
        unknown.sort();
        match unknown.first() {
            None => Ok(()),
            Some((line, key)) => Err(Error::Config {
                line: *line,
                message: format!("unknown key `{key}`"),
            }),
        }
    }
}

/// Parses a config on top of the recognition defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &RunConfig::recognition_defaults())
}

/// Parses a config on top of an explicit default profile. Omitted seeds
/// derive from `engine.seed`.
pub fn parse_config_with(text: &str, defaults: &RunConfig) -> Result<RunConfig> {
    let mut raw = Raw::parse(text)?;
    let mut cfg = defaults.clone();

    cfg.engine.seed = raw.u64("engine.seed", defaults.engine.seed)?;
    let base = cfg.engine.seed;

    let a = &mut cfg.architecture;
    a.n_inputs = raw.usize("architecture.n_inputs", a.n_inputs)?;
    a.n_pyramidal = raw.usize("architecture.n_pyramidal", a.n_pyramidal)?;
    a.n_inter = raw.usize("architecture.n_inter", a.n_inter)?;
    a.n_readout = raw.usize("architecture.n_readout", a.n_readout)?;
    a.sparsity = raw.f64("architecture.sparsity", a.sparsity)?;
    a.w_init_low = raw.f64("architecture.w_init_low", a.w_init_low)?;
    a.w_init_high = raw.f64("architecture.w_init_high", a.w_init_high)?;
    a.seed = raw.u64("architecture.seed", base.wrapping_add(1))?;

    let n = &mut cfg.neuron;
    n.tau = raw.f64("neuron.tau", n.tau)?;
    n.leak = raw.f64("neuron.leak", n.leak)?;
    n.couplings.basal = raw.f64("neuron.alpha_basal", n.couplings.basal)?;
    n.couplings.apical = raw.f64("neuron.alpha_apical", n.couplings.apical)?;
    n.couplings.soma = raw.f64("neuron.alpha_soma", n.couplings.soma)?;
    n.i_thr = raw.f64("neuron.i_thr", n.i_thr)?;
    n.i_reset = raw.f64("neuron.i_reset", n.i_reset)?;
    n.t_refr = raw.f64("neuron.t_refr", n.t_refr)?;
    n.sigma = raw.f64("neuron.sigma", n.sigma)?;
    n.tau_syn = raw.f64("neuron.tau_syn", n.tau_syn)?;
    n.tau_ca = raw.f64("neuron.tau_ca", n.tau_ca)?;
    n.j_ca = raw.f64("neuron.j_ca", n.j_ca)?;

    let s = &mut cfg.synapse;
    s.input_to_pyr_gain = raw.f64("synapse.input_to_pyr_gain", s.input_to_pyr_gain)?;
    s.pyr_to_inter_gain = raw.f64("synapse.pyr_to_inter_gain", s.pyr_to_inter_gain)?;
    s.pyr_to_readout_gain = raw.f64("synapse.pyr_to_readout_gain", s.pyr_to_readout_gain)?;
    s.readout_to_pyr_gain = raw.f64("synapse.readout_to_pyr_gain", s.readout_to_pyr_gain)?;
    s.inter_to_pyr_gain = raw.f64("synapse.inter_to_pyr_gain", s.inter_to_pyr_gain)?;
    s.readout_to_inter_gain = raw.f64("synapse.readout_to_inter_gain", s.readout_to_inter_gain)?;
    s.teacher_to_readout_gain =
        raw.f64("synapse.teacher_to_readout_gain", s.teacher_to_readout_gain)?;

    let p = &mut cfg.plasticity;
    p.input_to_pyr_eta = raw.f64("plasticity.input_to_pyr_eta", p.input_to_pyr_eta)?;
    p.input_to_pyr_theta = raw.f64("plasticity.input_to_pyr_theta", p.input_to_pyr_theta)?;
    p.pyr_to_inter_eta = raw.f64("plasticity.pyr_to_inter_eta", p.pyr_to_inter_eta)?;
    p.pyr_to_inter_theta = raw.f64("plasticity.pyr_to_inter_theta", p.pyr_to_inter_theta)?;
    p.pyr_to_readout_eta = raw.f64("plasticity.pyr_to_readout_eta", p.pyr_to_readout_eta)?;
    p.pyr_to_readout_theta = raw.f64("plasticity.pyr_to_readout_theta", p.pyr_to_readout_theta)?;
    p.inter_to_pyr_eta = raw.f64("plasticity.inter_to_pyr_eta", p.inter_to_pyr_eta)?;
    p.inter_to_pyr_theta = raw.f64("plasticity.inter_to_pyr_theta", p.inter_to_pyr_theta)?;
    p.w_min = raw.f64("plasticity.w_min", p.w_min)?;
    p.w_max = raw.f64("plasticity.w_max", p.w_max)?;
    let rule = raw.token(
        "plasticity.rule",
        match p.rule {
            RuleForm::Literal => "literal",
            RuleForm::Shifted => "shifted",
        },
        &["literal", "shifted"],
    )?;
    p.rule = if rule == "literal" {
        RuleForm::Literal
    } else {
        RuleForm::Shifted
    };
    let default_every = match p.trigger {
        Trigger::Periodic { every } => every,
        Trigger::PresynSpike => 10,
    };
    let every = raw.usize("plasticity.periodic_every", default_every)?;
    if every == 0 {
        return Err(Error::invalid("plasticity.periodic_every", "must be >= 1"));
    }
    let trigger = raw.token(
        "plasticity.trigger",
        match p.trigger {
            Trigger::PresynSpike => "presyn_spike",
            Trigger::Periodic { .. } => "periodic",
        },
        &["presyn_spike", "periodic"],
    )?;
    p.trigger = if trigger == "presyn_spike" {
        Trigger::PresynSpike
    } else {
        Trigger::Periodic { every }
    };

    let c = &mut cfg.conductance;
    c.readout_to_pyr_w = raw.f64("conductance.readout_to_pyr_w", c.readout_to_pyr_w)?;
    c.readout_to_pyr_alpha = raw.f64("conductance.readout_to_pyr_alpha", c.readout_to_pyr_alpha)?;
    c.readout_to_pyr_e_rev = raw.f64("conductance.readout_to_pyr_e_rev", c.readout_to_pyr_e_rev)?;
    c.readout_to_inter_w = raw.f64("conductance.readout_to_inter_w", c.readout_to_inter_w)?;
    c.readout_to_inter_alpha =
        raw.f64("conductance.readout_to_inter_alpha", c.readout_to_inter_alpha)?;
    c.readout_to_inter_e_rev =
        raw.f64("conductance.readout_to_inter_e_rev", c.readout_to_inter_e_rev)?;
    c.teacher_to_readout_w = raw.f64("conductance.teacher_to_readout_w", c.teacher_to_readout_w)?;
    c.teacher_to_readout_alpha = raw.f64(
        "conductance.teacher_to_readout_alpha",
        c.teacher_to_readout_alpha,
    )?;
    c.teacher_to_readout_e_rev = raw.f64(
        "conductance.teacher_to_readout_e_rev",
        c.teacher_to_readout_e_rev,
    )?;
    let convention = raw.token(
        "conductance.convention",
        match c.convention {
            ReversalConvention::DrivingForce => "driving_force",
            ReversalConvention::Literal => "literal",
        },
        &["driving_force", "literal"],
    )?;
    c.convention = if convention == "driving_force" {
        ReversalConvention::DrivingForce
    } else {
        ReversalConvention::Literal
    };

    let m = &mut cfg.mismatch;
    m.cv = raw.f64("mismatch.cv", m.cv)?;
    m.floor = raw.f64("mismatch.floor", m.floor)?;
    m.seed = raw.u64("mismatch.seed", base.wrapping_add(2))?;

    let st = &mut cfg.stimulus;
    st.channels = raw.usize("stimulus.channels", st.channels)?;
    st.duration = raw.f64("stimulus.duration", st.duration)?;
    st.n_spikes = raw.usize("stimulus.n_spikes", st.n_spikes)?;
    st.periodic = raw.bool("stimulus.periodic", st.periodic)?;
    st.seed = raw.u64("stimulus.seed", base.wrapping_add(3))?;
    st.alt_seed = raw.u64("stimulus.alt_seed", base.wrapping_add(4))?;
    st.teacher_rate = raw.f64("stimulus.teacher_rate", st.teacher_rate)?;
    let kind = raw.token(
        "stimulus.teacher_kind",
        match st.teacher_kind {
            TeacherKind::Regular => "regular",
            TeacherKind::Poisson => "poisson",
        },
        &["regular", "poisson"],
    )?;
    st.teacher_kind = if kind == "regular" {
        TeacherKind::Regular
    } else {
        TeacherKind::Poisson
    };
    st.teacher_seed = raw.u64("stimulus.teacher_seed", base.wrapping_add(5))?;

    let e = &mut cfg.engine;
    e.dt = raw.f64("engine.dt", e.dt)?;
    e.duration = raw.f64("engine.duration", e.duration)?;
    e.learning = raw.bool("engine.learning", e.learning)?;
    e.teacher = raw.bool("engine.teacher", e.teacher)?;
    e.record_spikes = raw.bool("engine.record_spikes", e.record_spikes)?;
    e.record_calcium = raw.bool("engine.record_calcium", e.record_calcium)?;
    e.record_weights = raw.bool("engine.record_weights", e.record_weights)?;
    e.record_compartments = raw.bool("engine.record_compartments", e.record_compartments)?;
    e.calcium_sample_every = raw.usize("engine.calcium_sample_every", e.calcium_sample_every)?;

    let x = &mut cfg.experiment;
    x.baseline_duration = raw.f64("experiment.baseline_duration", x.baseline_duration)?;
    x.training_duration = raw.f64("experiment.training_duration", x.training_duration)?;
    x.test_duration = raw.f64("experiment.test_duration", x.test_duration)?;
    x.silence_duration = raw.f64("experiment.silence_duration", x.silence_duration)?;
    x.training_blocks = raw.usize("experiment.training_blocks", x.training_blocks)?;
    if x.training_blocks == 0 {
        return Err(Error::invalid("experiment.training_blocks", "must be >= 1"));
    }

    raw.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::recognition_defaults());
        assert_eq!(cfg.stimulus.n_spikes, 128);
        assert_eq!(cfg.stimulus.channels, 32);
        assert_eq!(cfg.mismatch.cv, 0.2);
        assert_eq!(cfg.stimulus.teacher_rate, 900.0);
    }

    #[test]
    fn values_round_trip() {
        let cfg = parse_config("mismatch.cv = 0.2\n").unwrap();
        assert_eq!(cfg.mismatch.cv, 0.2);
        let text = cfg.to_text();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_text(), text);
    }

    #[test]
    fn validation_names_the_key() {
        let err = parse_config("engine.dt = -1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("engine.dt"), "{msg}");
    }

    #[test]
    fn unknown_keys_carry_line_numbers() {
        let err = parse_config("# comment\nstimulus.n_spikes = 10\nengine.dtx = 1\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("engine.dtx"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_mismatch_carries_line_number() {
        let err = parse_config("stimulus.n_spikes = twelve\n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn seeds_derive_from_engine_seed() {
        let cfg = parse_config("engine.seed = 100\n").unwrap();
        assert_eq!(cfg.architecture.seed, 101);
        assert_eq!(cfg.mismatch.seed, 102);
        assert_eq!(cfg.stimulus.seed, 103);
        assert_eq!(cfg.stimulus.alt_seed, 104);
        assert_eq!(cfg.stimulus.teacher_seed, 105);
        // Explicit seeds win over derivation.
        let cfg = parse_config("engine.seed = 100\nstimulus.seed = 7\n").unwrap();
        assert_eq!(cfg.stimulus.seed, 7);
        assert_eq!(cfg.stimulus.alt_seed, 104);
    }

    #[test]
    fn seed_offset_shifts_every_stream() {
        let cfg = RunConfig::recognition_defaults();
        let shifted = cfg.with_seed_offset(3);
        assert_eq!(shifted.engine.seed, cfg.engine.seed + 3);
        assert_eq!(shifted.architecture.seed, cfg.architecture.seed + 3);
        assert_eq!(shifted.mismatch.seed, cfg.mismatch.seed + 3);
        assert_eq!(shifted.stimulus.seed, cfg.stimulus.seed + 3);
        assert_eq!(shifted.stimulus.alt_seed, cfg.stimulus.alt_seed + 3);
    }

    #[test]
    fn discrimination_profile_differs() {
        let cfg = RunConfig::discrimination_defaults();
        assert_eq!(cfg.architecture.n_pyramidal, 8);
        assert_eq!(cfg.architecture.n_inter, 2);
        assert_eq!(cfg.architecture.n_readout, 2);
        assert_eq!(cfg.architecture.sparsity, 0.5);
        cfg.validate().unwrap();
    }

    #[test]
    fn infinity_round_trips() {
        let cfg = RunConfig::recognition_defaults();
        assert!(cfg.plasticity.w_max.is_infinite());
        let again = parse_config(&cfg.to_text()).unwrap();
        assert!(again.plasticity.w_max.is_infinite());
    }
}
