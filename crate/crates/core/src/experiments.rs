//! The two benchmark tasks: pattern recognition (learning gain L and
//! selectivity D on one readout) and pattern discrimination (two readouts,
//! one per pattern), plus the derived statistics used by both.
//!
//! Phase means are computed from the decimated calcium samples exactly as
//! they are persisted, so recomputing a metric from the written CSV
//! reproduces it bit for bit.

use crate::config::RunConfig;
use crate::engine::{run_phases, CalciumSample, Phase, Recording, Stimuli};
use crate::error::{Error, Result};
use crate::fabric::{apply_mismatch, build_network, ClassName, Population, WeightRecord};
use crate::stimulus::{deviant_pattern, generate_pattern, SpikeTrain};

/// Result of one recognition run.
#[derive(Debug, Clone)]
pub struct RecognitionReport {
    /// Trained response minus baseline response (teacher off).
    pub l: f64,
    /// Trained-pattern response minus deviant-pattern response.
    pub d: f64,
    /// Mean readout calcium per phase, in protocol order.
    pub phase_means: Vec<(String, f64)>,
    pub weights_pre: Vec<WeightRecord>,
    pub weights_post: Vec<WeightRecord>,
    /// Kolmogorov-Smirnov statistic between the input-weight snapshots.
    pub weight_shift: f64,
    /// Late-over-early ratio of the net apical current during training.
    pub apical_cancellation: f64,
    pub recordings: Vec<Recording>,
    /// Start time of each phase on the concatenated time axis.
    pub phase_offsets: Vec<f64>,
}

/// Result of one discrimination run.
#[derive(Debug, Clone)]
pub struct DiscriminationReport {
    /// Winning readout per pattern, by mean calcium in the test phase.
    pub winners: Vec<usize>,
    /// Winner-over-runner-up calcium ratio per pattern.
    pub margins: Vec<f64>,
    pub correct: Vec<bool>,
    /// Mean calcium per readout, per test pattern.
    pub readout_means: Vec<Vec<f64>>,
    pub weights_pre: Vec<WeightRecord>,
    pub weights_post: Vec<WeightRecord>,
    pub recordings: Vec<Recording>,
    pub phase_offsets: Vec<f64>,
}

impl RecognitionReport {
    pub fn metrics_rows(&self) -> Vec<(String, f64)> {
        vec![("L".to_string(), self.l), ("D".to_string(), self.d)]
    }
}

impl DiscriminationReport {
    pub fn metrics_rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        for (i, (winner, margin)) in self.winners.iter().zip(&self.margins).enumerate() {
            rows.push((format!("winner_pattern_{}", i + 1), *winner as f64));
            rows.push((format!("margin_pattern_{}", i + 1), *margin));
        }
        rows
    }
}

/// Runs the recognition protocol with learning enabled during training.
pub fn run_recognition(cfg: &RunConfig) -> Result<RecognitionReport> {
    recognition(cfg, true)
}

/// Control variant with the training phase's learning gate closed.
pub fn run_recognition_control(cfg: &RunConfig) -> Result<RecognitionReport> {
    recognition(cfg, false)
}

fn recognition(cfg: &RunConfig, learn: bool) -> Result<RecognitionReport> {
    cfg.validate()?;
    let mut net = build_network(&cfg.architecture(), &cfg.nominals())?;
    apply_mismatch(&mut net, &cfg.mismatch())?;

    let pattern_spec = cfg.pattern_spec();
    let pattern = generate_pattern(&pattern_spec)?;
    let deviant = deviant_pattern(&pattern_spec, cfg.stimulus.alt_seed)?;
    let n_inputs = cfg.architecture.n_inputs;
    let n_readout = cfg.architecture.n_readout;
    let exp = &cfg.experiment;

    let teacher = cfg
        .teacher_train(exp.training_duration)?
        .broadcast(n_readout)?;
    let phases = vec![
        Phase {
            label: "baseline".to_string(),
            stimuli: Stimuli {
                input: pattern.tiled(pattern_spec.duration, exp.baseline_duration),
                teacher: SpikeTrain::empty(n_readout),
            },
            learning: false,
            duration: exp.baseline_duration,
        },
        Phase {
            label: "training".to_string(),
            stimuli: Stimuli {
                input: pattern.tiled(pattern_spec.duration, exp.training_duration),
                teacher,
            },
            learning: learn,
            duration: exp.training_duration,
        },
        Phase {
            label: "trained".to_string(),
            stimuli: Stimuli {
                input: pattern.tiled(pattern_spec.duration, exp.test_duration),
                teacher: SpikeTrain::empty(n_readout),
            },
            learning: false,
            duration: exp.test_duration,
        },
        Phase {
            label: "silence".to_string(),
            stimuli: Stimuli::silence(n_inputs, n_readout),
            learning: false,
            duration: exp.silence_duration,
        },
        Phase {
            label: "deviant".to_string(),
            stimuli: Stimuli {
                input: deviant.tiled(pattern_spec.duration, exp.test_duration),
                teacher: SpikeTrain::empty(n_readout),
            },
            learning: false,
            duration: exp.test_duration,
        },
    ];

    let engine = cfg.engine_config();
    let mut session = crate::engine::Session::new(&mut net, &engine)?;
    let mut recordings = Vec::with_capacity(phases.len());
    let mut weights_pre = Vec::new();
    let mut weights_post = Vec::new();
    for (i, phase) in phases.iter().enumerate() {
        if i == 1 {
            weights_pre = session.network().weight_snapshot(Some(ClassName::InputToPyrBasal));
        }
        recordings.push(session.run_phase(phase)?);
        if i == 1 {
            weights_post = session.network().weight_snapshot(Some(ClassName::InputToPyrBasal));
        }
    }

    let skip = 3.0 * cfg.neuron.tau_ca;
    let phase_means: Vec<(String, f64)> = recordings
        .iter()
        .map(|rec| (rec.label.clone(), mean_readout_calcium(rec, skip)))
        .collect();
    let l = phase_means[2].1 - phase_means[0].1;
    let d = phase_means[2].1 - phase_means[4].1;
    let weight_shift = weight_shift_statistic(&weights_pre, &weights_post)?;
    let apical_cancellation = apical_cancellation_metric(&recordings[1])?;
    let phase_offsets = offsets(&recordings);

    Ok(RecognitionReport {
        l,
        d,
        phase_means,
        weights_pre,
        weights_post,
        weight_shift,
        apical_cancellation,
        recordings,
        phase_offsets,
    })
}

/// Runs the discrimination protocol: trains pattern 1 on readout 0 and
/// pattern 2 on readout 1 for the same duration, then tests both patterns
/// with the teacher off.
pub fn run_discrimination(cfg: &RunConfig) -> Result<DiscriminationReport> {
    discrimination(cfg, true, false)
}

/// Control variant without any training.
pub fn run_discrimination_untrained(cfg: &RunConfig) -> Result<DiscriminationReport> {
    discrimination(cfg, false, false)
}

/// Swaps the pattern-to-readout assignment; winners must swap with it.
pub fn run_discrimination_swapped(cfg: &RunConfig) -> Result<DiscriminationReport> {
    discrimination(cfg, true, true)
}

fn discrimination(cfg: &RunConfig, learn: bool, swap: bool) -> Result<DiscriminationReport> {
    cfg.validate()?;
    let n_readout = cfg.architecture.n_readout;
    if n_readout < 2 {
        return Err(Error::invalid(
            "architecture.n_readout",
            "discrimination needs at least two readouts",
        ));
    }
    let mut net = build_network(&cfg.architecture(), &cfg.nominals())?;
    apply_mismatch(&mut net, &cfg.mismatch())?;

    let pattern_spec = cfg.pattern_spec();
    let mut patterns = vec![
        generate_pattern(&pattern_spec)?,
        deviant_pattern(&pattern_spec, cfg.stimulus.alt_seed)?,
    ];
    if swap {
        patterns.reverse();
    }
    let n_inputs = cfg.architecture.n_inputs;
    let exp = &cfg.experiment;

    // Both patterns get exactly the same amount of teacher time, split into
    // alternating blocks so neither readout idles through the other's
    // entire training.
    let blocks = exp.training_blocks.max(1);
    let block_duration = exp.training_duration / blocks as f64;
    let mut phases = Vec::new();
    for block in 0..blocks {
        for (i, pattern) in patterns.iter().enumerate() {
            let teacher = cfg.teacher_train(block_duration)?.retarget(i, n_readout)?;
            phases.push(Phase {
                label: format!("train_pattern_{}_block_{}", i + 1, block + 1),
                stimuli: Stimuli {
                    input: pattern.tiled(pattern_spec.duration, block_duration),
                    teacher,
                },
                learning: learn,
                duration: block_duration,
            });
            phases.push(Phase {
                label: format!("pause_{}_block_{}", i + 1, block + 1),
                stimuli: Stimuli::silence(n_inputs, n_readout),
                learning: false,
                duration: exp.silence_duration,
            });
        }
    }
    for (i, pattern) in patterns.iter().enumerate() {
        phases.push(Phase {
            label: format!("test_pattern_{}", i + 1),
            stimuli: Stimuli {
                input: pattern.tiled(pattern_spec.duration, exp.test_duration),
                teacher: SpikeTrain::empty(n_readout),
            },
            learning: false,
            duration: exp.test_duration,
        });
        phases.push(Phase {
            label: format!("test_pause_{}", i + 1),
            stimuli: Stimuli::silence(n_inputs, n_readout),
            learning: false,
            duration: exp.silence_duration,
        });
    }

    let weights_pre = net.weight_snapshot(Some(ClassName::InputToPyrBasal));
    let recordings = run_phases(&mut net, &cfg.engine_config(), &phases)?;
    let weights_post = net.weight_snapshot(Some(ClassName::InputToPyrBasal));

    let skip = 3.0 * cfg.neuron.tau_ca;
    let mut readout_means = Vec::new();
    let mut winners = Vec::new();
    let mut margins = Vec::new();
    let mut correct = Vec::new();
    for i in 0..patterns.len() {
        let rec = recordings
            .iter()
            .find(|r| r.label == format!("test_pattern_{}", i + 1))
            .expect("test phase recorded");
        let means = per_readout_calcium(rec, skip, n_readout);
        let winner = argmax(&means);
        let runner_up = means
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != winner)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = if runner_up > 0.0 {
            means[winner] / runner_up
        } else {
            f64::INFINITY
        };
        // With swapped labels pattern i belongs to readout i still, because
        // the teacher assignment swaps together with the patterns.
        winners.push(winner);
        margins.push(margin);
        correct.push(winner == i);
        readout_means.push(means);
    }

    let phase_offsets = offsets(&recordings);
    Ok(DiscriminationReport {
        winners,
        margins,
        correct,
        readout_means,
        weights_pre,
        weights_post,
        recordings,
        phase_offsets,
    })
}

/// Late-over-early ratio of the mean absolute net apical current across the
/// pyramidal population: the first and last tenth of the recording are
/// compared. Values near zero mean the inhibition learned to cancel the
/// feedback; values near one mean nothing changed.
pub fn apical_cancellation_metric(recording: &Recording) -> Result<f64> {
    if recording.apical.is_empty() {
        return Err(Error::Contract(
            "apical cancellation metric requires compartment recording".to_string(),
        ));
    }
    let t_last = recording
        .apical
        .iter()
        .map(|s| s.t)
        .fold(f64::NEG_INFINITY, f64::max);
    let head_end = 0.1 * t_last;
    let tail_start = 0.9 * t_last;
    let mean_abs = |lo: f64, hi: f64| -> f64 {
        let mut acc = 0.0;
        let mut n = 0u64;
        for s in &recording.apical {
            if s.t >= lo && s.t <= hi {
                acc += s.net.abs();
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    };
    let early = mean_abs(0.0, head_end);
    let late = mean_abs(tail_start, t_last);
    if early == 0.0 {
        return Ok(if late == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(late / early)
}

/// Two-sample Kolmogorov-Smirnov statistic over the weight values of two
/// snapshots of the same synapse set.
pub fn weight_shift_statistic(pre: &[WeightRecord], post: &[WeightRecord]) -> Result<f64> {
    if pre.is_empty() || post.is_empty() {
        return Err(Error::Contract(
            "weight shift statistic requires non-empty snapshots".to_string(),
        ));
    }
    if pre.len() != post.len()
        || pre
            .iter()
            .zip(post)
            .any(|(a, b)| a.class != b.class || a.pre != b.pre || a.post != b.post)
    {
        return Err(Error::Contract(
            "weight snapshots cover different synapse sets".to_string(),
        ));
    }
    let a: Vec<f64> = pre.iter().map(|r| r.w).collect();
    let b: Vec<f64> = post.iter().map(|r| r.w).collect();
    Ok(ks_statistic(&a, &b))
}

/// Classic two-sample KS statistic, exact for ties.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Guard band for the settling-window cut. It keeps the decision boundary
/// off the sample grid so the same samples are selected whether times come
/// from memory or back from the nine-digit CSV form.
const WINDOW_GUARD: f64 = 5e-5;

/// Mean calcium over readout samples with time at or after `offset + skip`.
/// `offset` shifts the window onto a concatenated time axis; pass zero for
/// a single recording. Summation order follows sample order, so equal
/// sample sets give bit-identical means.
pub fn readout_calcium_mean(samples: &[CalciumSample], offset: f64, skip: f64) -> f64 {
    let cut = offset + skip;
    let mut acc = 0.0;
    let mut n = 0u64;
    for s in samples {
        if s.population == Population::Readout && s.t + WINDOW_GUARD >= cut {
            acc += s.value;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        acc / n as f64
    }
}

/// Mean calcium over all readout neurons of one recording, skipping the
/// first `skip` seconds to let the trace settle.
pub fn mean_readout_calcium(recording: &Recording, skip: f64) -> f64 {
    readout_calcium_mean(&recording.calcium, 0.0, skip)
}

fn per_readout_calcium(recording: &Recording, skip: f64, n_readout: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; n_readout];
    let mut n = vec![0u64; n_readout];
    for s in &recording.calcium {
        if s.population == Population::Readout && s.t + WINDOW_GUARD >= skip {
            acc[s.index] += s.value;
            n[s.index] += 1;
        }
    }
    acc.iter()
        .zip(&n)
        .map(|(a, c)| if *c == 0 { 0.0 } else { a / *c as f64 })
        .collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn offsets(recordings: &[Recording]) -> Vec<f64> {
    let mut out = Vec::with_capacity(recordings.len());
    let mut acc = 0.0;
    for rec in recordings {
        out.push(acc);
        acc += rec.duration;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ApicalSample, CalciumSample};
    use crate::stimulus::SpikeTrain;

    fn record(class: ClassName, pre: usize, post: usize, w: f64) -> WeightRecord {
        WeightRecord {
            class,
            pre,
            post,
            w,
        }
    }

    #[test]
    fn ks_statistic_basics() {
        assert_eq!(ks_statistic(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.1], &[5.0, 6.0]), 1.0);
        assert!((ks_statistic(&[1.0, 2.0], &[1.5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn weight_shift_validates_snapshots() {
        let class = ClassName::InputToPyrBasal;
        let pre = vec![record(class, 0, 0, 0.1), record(class, 1, 0, 0.2)];
        let same = weight_shift_statistic(&pre, &pre).unwrap();
        assert_eq!(same, 0.0);
        assert!(weight_shift_statistic(&pre, &[]).is_err());
        let other = vec![record(class, 0, 0, 0.1), record(class, 2, 0, 0.2)];
        assert!(weight_shift_statistic(&pre, &other).is_err());
    }

    #[test]
    fn cancellation_metric_contracts() {
        let empty = Recording {
            label: "x".into(),
            duration: 1.0,
            spikes_pyramidal: SpikeTrain::empty(1),
            spikes_inter: SpikeTrain::empty(1),
            spikes_readout: SpikeTrain::empty(1),
            calcium: Vec::new(),
            apical: Vec::new(),
            weights_start: Vec::new(),
            weights_end: Vec::new(),
        };
        assert!(apical_cancellation_metric(&empty).is_err());

        let mut rec = empty.clone();
        // Constant early current, zero late current: perfect cancellation.
        for k in 0..100 {
            let t = (k + 1) as f64 * 0.01;
            rec.apical.push(ApicalSample {
                t,
                index: 0,
                net: if t <= 0.5 { 0.8 } else { 0.0 },
                excitation: 0.8,
                inhibition: 0.0,
            });
        }
        let metric = apical_cancellation_metric(&rec).unwrap();
        assert_eq!(metric, 0.0);

        // Unchanged current: ratio one.
        let mut flat = empty.clone();
        for k in 0..100 {
            flat.apical.push(ApicalSample {
                t: (k + 1) as f64 * 0.01,
                index: 0,
                net: 0.8,
                excitation: 0.8,
                inhibition: 0.0,
            });
        }
        let metric = apical_cancellation_metric(&flat).unwrap();
        assert!((metric - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_mean_skips_settling_window() {
        let mut rec = Recording {
            label: "x".into(),
            duration: 1.0,
            spikes_pyramidal: SpikeTrain::empty(1),
            spikes_inter: SpikeTrain::empty(1),
            spikes_readout: SpikeTrain::empty(1),
            calcium: Vec::new(),
            apical: Vec::new(),
            weights_start: Vec::new(),
            weights_end: Vec::new(),
        };
        for k in 0..10 {
            let t = (k + 1) as f64 * 0.1;
            rec.calcium.push(CalciumSample {
                t,
                population: Population::Readout,
                index: 0,
                value: if t < 0.5 { 100.0 } else { 2.0 },
            });
        }
        // Samples before the skip boundary are excluded.
        assert_eq!(mean_readout_calcium(&rec, 0.5), 2.0);
    }
}
