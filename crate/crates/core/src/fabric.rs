//! Network construction: populations, connection classes, sparsity, weight
//! initialization and per-instance parameter mismatch.
//!
//! The three neuron populations are pyramidal (hidden), interneurons and
//! readouts. Sensory input and teacher channels are spike sources, not
//! neurons. The wiring follows a fixed set of connection classes; the edge
//! list is fully determined by the architecture seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{
    conductance_current, Compartment, ConductanceParams, NeuronParams, NeuronState,
    ReversalConvention,
};
use crate::error::{Error, Result};
use crate::plasticity::{error_pair, ErrorPair, PlasticityParams, SynapseRole};

/// Neuron populations, in fixed update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Population {
    Pyramidal,
    Inter,
    Readout,
}

impl Population {
    pub const ALL: [Population; 3] = [Population::Pyramidal, Population::Inter, Population::Readout];

    pub fn as_str(&self) -> &'static str {
        match self {
            Population::Pyramidal => "pyramidal",
            Population::Inter => "inter",
            Population::Readout => "readout",
        }
    }
}

/// Presynaptic side of an edge. Input and teacher channels are external
/// spike sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Input(usize),
    Teacher(usize),
    Neuron(Population, usize),
}

impl Source {
    pub fn index(&self) -> usize {
        match self {
            Source::Input(i) | Source::Teacher(i) => *i,
            Source::Neuron(_, i) => *i,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynKind {
    Current,
    Conductance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

/// The seven connection classes of the architecture, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassName {
    InputToPyrBasal,
    PyrToInterBasal,
    PyrToReadoutBasal,
    ReadoutToPyrApical,
    InterToPyrApical,
    ReadoutToInterSoma,
    TeacherToReadoutSoma,
}

/// Static properties of a connection class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassProperties {
    pub plastic: bool,
    pub kind: SynKind,
    pub polarity: Polarity,
    pub target: Compartment,
}

impl ClassName {
    pub const ALL: [ClassName; 7] = [
        ClassName::InputToPyrBasal,
        ClassName::PyrToInterBasal,
        ClassName::PyrToReadoutBasal,
        ClassName::ReadoutToPyrApical,
        ClassName::InterToPyrApical,
        ClassName::ReadoutToInterSoma,
        ClassName::TeacherToReadoutSoma,
    ];

    pub fn properties(&self) -> ClassProperties {
        use ClassName::*;
        use Compartment::*;
        match self {
            InputToPyrBasal => ClassProperties {
                plastic: true,
                kind: SynKind::Current,
                polarity: Polarity::Excitatory,
                target: Basal,
            },
            PyrToInterBasal => ClassProperties {
                plastic: true,
                kind: SynKind::Current,
                polarity: Polarity::Excitatory,
                target: Basal,
            },
            PyrToReadoutBasal => ClassProperties {
                plastic: true,
                kind: SynKind::Current,
                polarity: Polarity::Excitatory,
                target: Basal,
            },
            ReadoutToPyrApical => ClassProperties {
                plastic: false,
                kind: SynKind::Conductance,
                polarity: Polarity::Excitatory,
                target: Apical,
            },
            InterToPyrApical => ClassProperties {
                plastic: true,
                kind: SynKind::Current,
                polarity: Polarity::Inhibitory,
                target: Apical,
            },
            ReadoutToInterSoma => ClassProperties {
                plastic: false,
                kind: SynKind::Conductance,
                polarity: Polarity::Excitatory,
                target: Soma,
            },
            TeacherToReadoutSoma => ClassProperties {
                plastic: false,
                kind: SynKind::Conductance,
                polarity: Polarity::Excitatory,
                target: Soma,
            },
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassName::InputToPyrBasal => "input_to_pyr_basal",
            ClassName::PyrToInterBasal => "pyr_to_inter_basal",
            ClassName::PyrToReadoutBasal => "pyr_to_readout_basal",
            ClassName::ReadoutToPyrApical => "readout_to_pyr_apical",
            ClassName::InterToPyrApical => "inter_to_pyr_apical",
            ClassName::ReadoutToInterSoma => "readout_to_inter_soma",
            ClassName::TeacherToReadoutSoma => "teacher_to_readout_soma",
        }
    }

    /// Role of a plastic class in the learning rule.
    pub fn role(&self) -> Option<SynapseRole> {
        match self {
            ClassName::InputToPyrBasal | ClassName::PyrToReadoutBasal => {
                Some(SynapseRole::BasalBottomUp)
            }
            ClassName::PyrToInterBasal => Some(SynapseRole::LateralToInter),
            ClassName::InterToPyrApical => Some(SynapseRole::ApicalCancellation),
            _ => None,
        }
    }
}

/// A directed edge with its per-instance fabricated parameters and its
/// mutable trace and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Synapse {
    pub class: ClassName,
    pub pre: Source,
    pub post: (Population, usize),
    /// Nonnegative weight magnitude; inhibitory classes negate their
    /// contribution when it is injected.
    pub w: f64,
    /// Low-passed synaptic current trace, nA.
    pub i_syn: f64,
    /// Trace time constant, seconds (per-synapse, mismatched).
    pub tau_syn: f64,
    /// Trace jump per unit weight on a presynaptic spike, nA.
    pub i_gain: f64,
    pub plasticity: Option<PlasticityParams>,
    pub conductance: Option<ConductanceParams>,
}

impl Synapse {
    pub fn is_plastic(&self) -> bool {
        self.plasticity.is_some()
    }

    pub fn role(&self) -> Option<SynapseRole> {
        self.class.role()
    }

    /// Error pair for the learning rule, from the postsynaptic state of the
    /// current step. Fixed synapses have no error pair.
    pub fn error_pair_for(&self, post: &NeuronState) -> Result<ErrorPair> {
        match self.role() {
            Some(role) => Ok(error_pair(role, post)),
            None => Err(Error::Contract(format!(
                "error pair requested for fixed synapse class {}",
                self.class.as_str()
            ))),
        }
    }

    /// Applies a weight delta, clamped to the synapse bounds. No-op on
    /// fixed synapses is a contract violation.
    pub fn apply_update(&mut self, delta: f64) -> Result<()> {
        match &self.plasticity {
            Some(p) => {
                self.w = crate::plasticity::apply_delta(self.w, delta, p);
                Ok(())
            }
            None => Err(Error::Contract(format!(
                "weight update requested for fixed synapse class {}",
                self.class.as_str()
            ))),
        }
    }

    /// Signed current this synapse injects into its target compartment,
    /// given the postsynaptic somatic current of the previous step.
    pub fn injection(&self, post_soma: f64) -> f64 {
        match self.class.properties().kind {
            SynKind::Current => match self.class.properties().polarity {
                Polarity::Excitatory => self.i_syn,
                Polarity::Inhibitory => -self.i_syn,
            },
            SynKind::Conductance => {
                let params = self
                    .conductance
                    .as_ref()
                    .expect("conductance synapse always carries parameters");
                conductance_current(self.i_syn, post_soma, params)
            }
        }
    }
}

/// Population sizes, wiring probability and weight initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    pub n_inputs: usize,
    pub n_pyramidal: usize,
    pub n_inter: usize,
    pub n_readout: usize,
    /// Connection probability for input->pyramidal and pyramidal->readout.
    pub sparsity: f64,
    pub w_init_low: f64,
    pub w_init_high: f64,
    pub seed: u64,
}

impl ArchitectureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_inputs < 1 || self.n_pyramidal < 1 || self.n_inter < 1 || self.n_readout < 1 {
            return Err(Error::invalid(
                "architecture",
                "all population counts must be >= 1",
            ));
        }
        if self.n_inter != self.n_readout {
            return Err(Error::invalid(
                "architecture.n_inter",
                "must equal architecture.n_readout",
            ));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::invalid("architecture.sparsity", "must be in [0, 1]"));
        }
        if !(self.w_init_low < self.w_init_high) || self.w_init_low < 0.0 {
            return Err(Error::invalid(
                "architecture.w_init_low",
                "must satisfy 0 <= low < high",
            ));
        }
        Ok(())
    }
}

/// Fabrication-mismatch model: every fabricated parameter is resampled as
/// `nominal * (1 + cv * N(0, 1))`, clamped below at `floor * nominal`.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchConfig {
    pub cv: f64,
    pub floor: f64,
    pub seed: u64,
}

impl MismatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.cv) {
            return Err(Error::invalid("mismatch.cv", "must be in [0, 1)"));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(Error::invalid("mismatch.floor", "must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Nominal per-class learning rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityNominal {
    pub eta: f64,
    pub theta: f64,
}

/// Nominal fixed-synapse parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductanceNominal {
    pub w: f64,
    pub alpha: f64,
    pub e_rev: f64,
}

/// Everything the builder needs besides the architecture itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Nominals {
    pub neuron: NeuronParams,
    /// Trace jump per unit weight, per class, nA.
    pub gain_input_to_pyr: f64,
    pub gain_pyr_to_inter: f64,
    pub gain_pyr_to_readout: f64,
    pub gain_readout_to_pyr: f64,
    pub gain_inter_to_pyr: f64,
    pub gain_readout_to_inter: f64,
    pub gain_teacher_to_readout: f64,
    pub plastic_input_to_pyr: PlasticityNominal,
    pub plastic_pyr_to_inter: PlasticityNominal,
    pub plastic_pyr_to_readout: PlasticityNominal,
    pub plastic_inter_to_pyr: PlasticityNominal,
    pub w_min: f64,
    pub w_max: f64,
    pub trigger: crate::plasticity::Trigger,
    pub form: crate::plasticity::RuleForm,
    pub fixed_readout_to_pyr: ConductanceNominal,
    pub fixed_readout_to_inter: ConductanceNominal,
    pub fixed_teacher_to_readout: ConductanceNominal,
    pub convention: ReversalConvention,
}

impl Nominals {
    pub fn gain(&self, class: ClassName) -> f64 {
        match class {
            ClassName::InputToPyrBasal => self.gain_input_to_pyr,
            ClassName::PyrToInterBasal => self.gain_pyr_to_inter,
            ClassName::PyrToReadoutBasal => self.gain_pyr_to_readout,
            ClassName::ReadoutToPyrApical => self.gain_readout_to_pyr,
            ClassName::InterToPyrApical => self.gain_inter_to_pyr,
            ClassName::ReadoutToInterSoma => self.gain_readout_to_inter,
            ClassName::TeacherToReadoutSoma => self.gain_teacher_to_readout,
        }
    }

    pub fn plastic(&self, class: ClassName) -> Option<PlasticityNominal> {
        match class {
            ClassName::InputToPyrBasal => Some(self.plastic_input_to_pyr),
            ClassName::PyrToInterBasal => Some(self.plastic_pyr_to_inter),
            ClassName::PyrToReadoutBasal => Some(self.plastic_pyr_to_readout),
            ClassName::InterToPyrApical => Some(self.plastic_inter_to_pyr),
            _ => None,
        }
    }

    pub fn fixed(&self, class: ClassName) -> Option<ConductanceNominal> {
        match class {
            ClassName::ReadoutToPyrApical => Some(self.fixed_readout_to_pyr),
            ClassName::ReadoutToInterSoma => Some(self.fixed_readout_to_inter),
            ClassName::TeacherToReadoutSoma => Some(self.fixed_teacher_to_readout),
            _ => None,
        }
    }
}

/// A neuron instance: per-instance parameters plus mutable state.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronUnit {
    pub params: NeuronParams,
    pub state: NeuronState,
}

/// One row of a weight snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRecord {
    pub class: ClassName,
    pub pre: usize,
    pub post: usize,
    pub w: f64,
}

/// Immutable topology plus the mutable per-neuron and per-synapse state
/// owned by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: ArchitectureSpec,
    pub pyramidal: Vec<NeuronUnit>,
    pub inter: Vec<NeuronUnit>,
    pub readout: Vec<NeuronUnit>,
    pub synapses: Vec<Synapse>,
}

impl Network {
    pub fn population(&self, pop: Population) -> &[NeuronUnit] {
        match pop {
            Population::Pyramidal => &self.pyramidal,
            Population::Inter => &self.inter,
            Population::Readout => &self.readout,
        }
    }

    pub fn population_mut(&mut self, pop: Population) -> &mut Vec<NeuronUnit> {
        match pop {
            Population::Pyramidal => &mut self.pyramidal,
            Population::Inter => &mut self.inter,
            Population::Readout => &mut self.readout,
        }
    }

    pub fn neuron(&self, pop: Population, index: usize) -> &NeuronUnit {
        &self.population(pop)[index]
    }

    /// Sum of the synaptic contributions targeting one compartment of one
    /// neuron, using the stored traces and the neuron's current somatic
    /// current. Conductance synapses contribute through the reversal-level
    /// formula instead of their raw trace.
    pub fn compartment_current(&self, pop: Population, index: usize, comp: Compartment) -> f64 {
        let soma = self.neuron(pop, index).state.i_soma;
        self.synapses
            .iter()
            .filter(|s| s.post == (pop, index) && s.class.properties().target == comp)
            .map(|s| s.injection(soma))
            .sum()
    }

    /// Deterministically ordered weight listing, optionally restricted to
    /// one connection class.
    pub fn weight_snapshot(&self, class_filter: Option<ClassName>) -> Vec<WeightRecord> {
        self.synapses
            .iter()
            .filter(|s| class_filter.map_or(true, |c| s.class == c))
            .map(|s| WeightRecord {
                class: s.class,
                pre: s.pre.index(),
                post: s.post.1,
                w: s.w,
            })
            .collect()
    }

    /// Shifts refractory clocks back after a completed run so the next run
    /// can restart its clock at zero.
    pub fn rebase_time(&mut self, elapsed: f64) {
        for pop in Population::ALL {
            for unit in self.population_mut(pop) {
                let state = &mut unit.state;
                state.refr_until = (state.refr_until - elapsed).max(0.0);
            }
        }
    }
}

/// Builds populations and edges. Edge order is canonical: class-major, then
/// presynaptic index, then postsynaptic index. The architecture seed fully
/// determines both the edge set and the initial plastic weights.
pub fn build_network(arch: &ArchitectureSpec, nominals: &Nominals) -> Result<Network> {
    arch.validate()?;
    nominals.neuron.validate("neuron")?;
    let mut rng = ChaCha8Rng::seed_from_u64(arch.seed);

    let unit = NeuronUnit {
        params: nominals.neuron.clone(),
        state: NeuronState::default(),
    };
    let pyramidal = vec![unit.clone(); arch.n_pyramidal];
    let inter = vec![unit.clone(); arch.n_inter];
    let readout = vec![unit; arch.n_readout];

    let mut synapses = Vec::new();
    for class in ClassName::ALL {
        let props = class.properties();
        let pairs: Vec<(Source, (Population, usize))> = match class {
            ClassName::InputToPyrBasal => all_pairs(
                arch.n_inputs,
                arch.n_pyramidal,
                |i| Source::Input(i),
                Population::Pyramidal,
            ),
            ClassName::PyrToInterBasal => all_pairs(
                arch.n_pyramidal,
                arch.n_inter,
                |i| Source::Neuron(Population::Pyramidal, i),
                Population::Inter,
            ),
            ClassName::PyrToReadoutBasal => all_pairs(
                arch.n_pyramidal,
                arch.n_readout,
                |i| Source::Neuron(Population::Pyramidal, i),
                Population::Readout,
            ),
            ClassName::ReadoutToPyrApical => all_pairs(
                arch.n_readout,
                arch.n_pyramidal,
                |i| Source::Neuron(Population::Readout, i),
                Population::Pyramidal,
            ),
            ClassName::InterToPyrApical => all_pairs(
                arch.n_inter,
                arch.n_pyramidal,
                |i| Source::Neuron(Population::Inter, i),
                Population::Pyramidal,
            ),
            ClassName::ReadoutToInterSoma => one_to_one(
                arch.n_readout,
                |i| Source::Neuron(Population::Readout, i),
                Population::Inter,
            ),
            ClassName::TeacherToReadoutSoma => {
                one_to_one(arch.n_readout, Source::Teacher, Population::Readout)
            }
        };
        let sparse = matches!(
            class,
            ClassName::InputToPyrBasal | ClassName::PyrToReadoutBasal
        );
        for (pre, post) in pairs {
            if sparse && !(rng.gen::<f64>() < arch.sparsity) {
                continue;
            }
            let w = if props.plastic {
                rng.gen_range(arch.w_init_low..arch.w_init_high)
            } else {
                nominals
                    .fixed(class)
                    .expect("fixed class always has conductance nominals")
                    .w
            };
            let plasticity = nominals.plastic(class).map(|p| PlasticityParams {
                eta: p.eta,
                theta: p.theta,
                w_min: nominals.w_min,
                w_max: nominals.w_max,
                trigger: nominals.trigger,
                form: nominals.form,
            });
            let conductance = nominals.fixed(class).map(|c| ConductanceParams {
                alpha: c.alpha,
                e_rev: c.e_rev,
                convention: nominals.convention,
            });
            synapses.push(Synapse {
                class,
                pre,
                post,
                w,
                i_syn: 0.0,
                tau_syn: nominals.neuron.tau_syn,
                i_gain: nominals.gain(class),
                plasticity,
                conductance,
            });
        }
    }

    Ok(Network {
        arch: arch.clone(),
        pyramidal,
        inter,
        readout,
        synapses,
    })
}

fn all_pairs(
    n_pre: usize,
    n_post: usize,
    pre: impl Fn(usize) -> Source,
    post_pop: Population,
) -> Vec<(Source, (Population, usize))> {
    let mut out = Vec::with_capacity(n_pre * n_post);
    for i in 0..n_pre {
        for j in 0..n_post {
            out.push((pre(i), (post_pop, j)));
        }
    }
    out
}

fn one_to_one(
    n: usize,
    pre: impl Fn(usize) -> Source,
    post_pop: Population,
) -> Vec<(Source, (Population, usize))> {
    (0..n).map(|i| (pre(i), (post_pop, i))).collect()
}

/// Resamples every fabricated parameter around its nominal value.
///
/// Mismatched per neuron: tau, leak, the three coupling factors, i_thr.
/// Mismatched per synapse: tau_syn, i_gain, plus alpha and e_rev on
/// conductance synapses and eta and theta on plastic ones. Plastic weight
/// values are state, not fabricated parameters, and stay untouched.
pub fn apply_mismatch(network: &mut Network, cfg: &MismatchConfig) -> Result<()> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |nominal: f64| -> f64 { jitter(&mut rng, nominal, cfg.cv, cfg.floor) };

    for pop in Population::ALL {
        let units = match pop {
            Population::Pyramidal => &mut network.pyramidal,
            Population::Inter => &mut network.inter,
            Population::Readout => &mut network.readout,
        };
        for unit in units.iter_mut() {
            let p = &mut unit.params;
            p.tau = draw(p.tau);
            p.leak = draw(p.leak);
            p.couplings.basal = draw(p.couplings.basal);
            p.couplings.apical = draw(p.couplings.apical);
            p.couplings.soma = draw(p.couplings.soma);
            // The threshold keeps headroom above the reset level, otherwise
            // an unlucky draw produces a neuron that fires forever.
            p.i_thr = draw(p.i_thr).max(p.i_reset * 1.05);
        }
    }
    for syn in network.synapses.iter_mut() {
        syn.tau_syn = draw(syn.tau_syn);
        syn.i_gain = draw(syn.i_gain);
        if let Some(c) = syn.conductance.as_mut() {
            c.alpha = draw(c.alpha);
            c.e_rev = draw(c.e_rev);
        }
        if let Some(p) = syn.plasticity.as_mut() {
            p.eta = draw(p.eta);
            p.theta = draw(p.theta);
        }
    }
    Ok(())
}

/// One mismatch draw: `nominal * (1 + cv * N(0, 1))`, clamped below at
/// `floor * nominal`.
pub fn jitter(rng: &mut ChaCha8Rng, nominal: f64, cv: f64, floor: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (nominal * (1.0 + cv * z)).max(floor * nominal)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::plasticity::{RuleForm, Trigger};

    pub(crate) fn nominals() -> Nominals {
        Nominals {
            neuron: NeuronParams {
                tau: 0.01,
                leak: 0.5,
                couplings: crate::dynamics::PerCompartment {
                    basal: 3.0,
                    apical: 1.0,
                    soma: 3.0,
                },
                i_thr: 1.0,
                i_reset: 0.9,
                t_refr: 0.001,
                sigma: 0.05,
                tau_syn: 0.01,
                tau_ca: 0.2,
                j_ca: 1.0,
            },
            gain_input_to_pyr: 1.0,
            gain_pyr_to_inter: 1.0,
            gain_pyr_to_readout: 1.0,
            gain_readout_to_pyr: 1.0,
            gain_inter_to_pyr: 0.05,
            gain_readout_to_inter: 1.0,
            gain_teacher_to_readout: 1.0,
            plastic_input_to_pyr: PlasticityNominal { eta: 0.2, theta: 0.04 },
            plastic_pyr_to_inter: PlasticityNominal { eta: 0.2, theta: 0.04 },
            plastic_pyr_to_readout: PlasticityNominal { eta: 0.1, theta: 0.02 },
            plastic_inter_to_pyr: PlasticityNominal { eta: 0.3, theta: 0.06 },
            w_min: 0.0,
            w_max: f64::INFINITY,
            trigger: Trigger::PresynSpike,
            form: RuleForm::Literal,
            fixed_readout_to_pyr: ConductanceNominal {
                w: 1.0,
                alpha: 0.04,
                e_rev: 3.0,
            },
            fixed_readout_to_inter: ConductanceNominal {
                w: 1.0,
                alpha: 0.5,
                e_rev: 3.0,
            },
            fixed_teacher_to_readout: ConductanceNominal {
                w: 1.0,
                alpha: 0.5,
                e_rev: 3.0,
            },
            convention: ReversalConvention::DrivingForce,
        }
    }

    fn recognition_arch() -> ArchitectureSpec {
        ArchitectureSpec {
            n_inputs: 32,
            n_pyramidal: 2,
            n_inter: 1,
            n_readout: 1,
            sparsity: 1.0,
            w_init_low: 0.05,
            w_init_high: 0.15,
            seed: 7,
        }
    }

    #[test]
    fn recognition_network_edge_count() {
        let net = build_network(&recognition_arch(), &nominals()).unwrap();
        assert_eq!(net.pyramidal.len(), 2);
        assert_eq!(net.inter.len(), 1);
        assert_eq!(net.readout.len(), 1);
        // 32*2 input->P, 2 P->I, 2 P->R, 2 R->P, 2 I->P, 1 R->I, 1 T->R.
        assert_eq!(net.synapses.len(), 74);
        let count = |class: ClassName| net.synapses.iter().filter(|s| s.class == class).count();
        assert_eq!(count(ClassName::InputToPyrBasal), 64);
        assert_eq!(count(ClassName::PyrToInterBasal), 2);
        assert_eq!(count(ClassName::PyrToReadoutBasal), 2);
        assert_eq!(count(ClassName::ReadoutToPyrApical), 2);
        assert_eq!(count(ClassName::InterToPyrApical), 2);
        assert_eq!(count(ClassName::ReadoutToInterSoma), 1);
        assert_eq!(count(ClassName::TeacherToReadoutSoma), 1);
    }

    #[test]
    fn sparse_edge_count_tracks_binomial_expectation() {
        let arch = ArchitectureSpec {
            n_inputs: 32,
            n_pyramidal: 8,
            n_inter: 2,
            n_readout: 2,
            sparsity: 0.5,
            w_init_low: 0.05,
            w_init_high: 0.15,
            seed: 0,
        };
        let trials = 100u64;
        let mut total = 0usize;
        for seed in 0..trials {
            let net = build_network(
                &ArchitectureSpec {
                    seed,
                    ..arch.clone()
                },
                &nominals(),
            )
            .unwrap();
            total += net
                .synapses
                .iter()
                .filter(|s| s.class == ClassName::InputToPyrBasal)
                .count();
        }
        // Binomial(100 * 32 * 8, 0.5): mean 12800, sd ~56.6.
        let n = (trials as usize * 32 * 8) as f64;
        let mean = n * 0.5;
        let sd = (n * 0.25).sqrt();
        assert!(
            ((total as f64) - mean).abs() < 3.0 * sd,
            "total {total} outside 3 sd of {mean}"
        );
    }

    #[test]
    fn same_seed_builds_identical_networks() {
        let a = build_network(&recognition_arch(), &nominals()).unwrap();
        let b = build_network(&recognition_arch(), &nominals()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interneuron_count_rule_enforced() {
        let mut arch = recognition_arch();
        arch.n_inter = 2;
        assert!(build_network(&arch, &nominals()).is_err());
    }

    #[test]
    fn class_constraints_hold() {
        let net = build_network(&recognition_arch(), &nominals()).unwrap();
        for syn in &net.synapses {
            let props = syn.class.properties();
            match props.kind {
                SynKind::Conductance => {
                    assert!(!props.plastic);
                    assert!(syn.conductance.is_some());
                    assert!(syn.plasticity.is_none());
                }
                SynKind::Current => {
                    assert!(props.plastic);
                    assert!(syn.plasticity.is_some());
                    assert!(syn.conductance.is_none());
                }
            }
            if syn.class == ClassName::InterToPyrApical {
                assert_eq!(props.polarity, Polarity::Inhibitory);
            } else {
                assert_eq!(props.polarity, Polarity::Excitatory);
            }
        }
    }

    #[test]
    fn snapshot_untrained_weights_in_range() {
        let arch = recognition_arch();
        let net = build_network(&arch, &nominals()).unwrap();
        let snap = net.weight_snapshot(Some(ClassName::InputToPyrBasal));
        assert_eq!(snap.len(), 64);
        for rec in &snap {
            assert!(rec.w >= arch.w_init_low && rec.w < arch.w_init_high);
        }
        assert!(net
            .weight_snapshot(Some(ClassName::TeacherToReadoutSoma))
            .iter()
            .all(|r| r.w == 1.0));
        let again = net.weight_snapshot(Some(ClassName::InputToPyrBasal));
        assert_eq!(snap, again);
    }

    #[test]
    fn mismatch_zero_cv_is_identity() {
        let mut net = build_network(&recognition_arch(), &nominals()).unwrap();
        let reference = net.clone();
        apply_mismatch(
            &mut net,
            &MismatchConfig {
                cv: 0.0,
                floor: 0.05,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(net, reference);
    }

    #[test]
    fn mismatch_sampler_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let nominal = 2.5;
        let cv = 0.2;
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| jitter(&mut rng, nominal, cv, 0.05)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        assert!((mean - nominal).abs() / nominal < 0.01, "mean {mean}");
        assert!(
            (sd - cv * nominal).abs() / (cv * nominal) < 0.05,
            "sd {sd}"
        );
    }

    #[test]
    fn mismatch_respects_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Huge cv forces many raw draws below the floor.
        for _ in 0..10_000 {
            let v = jitter(&mut rng, 1.0, 0.99, 0.05);
            assert!(v >= 0.05);
        }
        let mut net = build_network(&recognition_arch(), &nominals()).unwrap();
        let reference = net.clone();
        apply_mismatch(
            &mut net,
            &MismatchConfig {
                cv: 0.2,
                floor: 0.05,
                seed: 11,
            },
        )
        .unwrap();
        for (unit, nominal) in net.pyramidal.iter().zip(&reference.pyramidal) {
            assert!(unit.params.tau >= 0.05 * nominal.params.tau);
            assert!(unit.params.i_thr >= 0.05 * nominal.params.i_thr);
        }
        // Plastic weights are state and must not move.
        for (a, b) in net.synapses.iter().zip(&reference.synapses) {
            assert_eq!(a.w, b.w);
        }
    }

    #[test]
    fn compartment_current_sums_and_conductance() {
        let mut net = build_network(&recognition_arch(), &nominals()).unwrap();
        // No traces yet: all compartment currents are zero.
        assert_eq!(
            net.compartment_current(Population::Pyramidal, 0, Compartment::Basal),
            0.0
        );
        // Give two basal synapses of pyramidal 0 known traces.
        let mut set = 0;
        for syn in net.synapses.iter_mut() {
            if syn.class == ClassName::InputToPyrBasal && syn.post == (Population::Pyramidal, 0) {
                syn.i_syn = if set == 0 { 0.3 } else { 0.2 };
                set += 1;
                if set == 2 {
                    break;
                }
            }
        }
        let basal = net.compartment_current(Population::Pyramidal, 0, Compartment::Basal);
        assert!((basal - 0.5).abs() < 1e-15);

        // A conductance synapse contributes through the reversal formula.
        let idx = net
            .synapses
            .iter()
            .position(|s| s.class == ClassName::TeacherToReadoutSoma)
            .unwrap();
        net.synapses[idx].i_syn = 2.0;
        net.synapses[idx].conductance = Some(ConductanceParams {
            alpha: 0.5,
            e_rev: 3.0,
            convention: ReversalConvention::DrivingForce,
        });
        net.readout[0].state.i_soma = 1.0;
        let soma_in = net.compartment_current(Population::Readout, 0, Compartment::Soma);
        assert!((soma_in - 2.0).abs() < 1e-15);
    }
}
