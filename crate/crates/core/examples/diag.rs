// Temporary calibration diagnostic. Not part of the deliverable.
use pyrite::config::RunConfig;
use pyrite::experiments::{
    run_discrimination, run_discrimination_untrained, run_recognition, run_recognition_control,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn phases(n: u64, extra: &str) {
    use pyrite::fabric::Population;
    let base = pyrite::config::parse_config_with(extra, &RunConfig::recognition_defaults())
        .expect("bad inline config");
    for i in 0..n {
        let cfg = base.with_seed_offset(i);
        let rep = run_recognition(&cfg).unwrap();
        let w_pr: Vec<f64> = {
            let mut net = pyrite::fabric::build_network(&cfg.architecture(), &cfg.nominals()).unwrap();
            pyrite::fabric::apply_mismatch(&mut net, &cfg.mismatch()).unwrap();
            Vec::new()
        };
        let _ = w_pr;
        let final_weights: Vec<(String, f64)> = rep
            .recordings
            .last()
            .unwrap()
            .weights_end
            .iter()
            .filter(|r| {
                matches!(
                    r.class,
                    pyrite::fabric::ClassName::PyrToReadoutBasal
                        | pyrite::fabric::ClassName::PyrToInterBasal
                        | pyrite::fabric::ClassName::InterToPyrApical
                )
            })
            .map(|r| (format!("{}:{}->{}", r.class.as_str(), r.pre, r.post), r.w))
            .collect();
        println!(
            "=== seed {i}: L={:+.2} D={:+.2} ks={:.2} cancel={:.2} w={:?}",
            rep.l,
            rep.d,
            rep.weight_shift,
            rep.apical_cancellation,
            final_weights
                .iter()
                .map(|(k, v)| format!("{k}={v:.3}"))
                .collect::<Vec<_>>()
        );
        for rec in &rep.recordings {
            let dur = rec.duration.max(1e-9);
            let rate = |pop: Population, idx: usize| {
                rec.spikes(pop)
                    .events()
                    .iter()
                    .filter(|e| e.channel == idx)
                    .count() as f64
                    / dur
            };
            let (mut net, mut exc, mut inh, mut m) = (0.0, 0.0, 0.0, 0u64);
            for s in &rec.apical {
                net += s.net;
                exc += s.excitation;
                inh += s.inhibition;
                m += 1;
            }
            let m = m.max(1) as f64;
            println!(
                "  {:9} P=[{:5.0},{:5.0}] I={:5.0} R={:5.0}  apical net={:+.3} exc={:.3} inh={:.3}",
                rec.label,
                rate(Population::Pyramidal, 0),
                rate(Population::Pyramidal, 1),
                rate(Population::Inter, 0),
                rate(Population::Readout, 0),
                net / m,
                exc / m,
                inh / m
            );
        }
    }
}

fn disc_phases(n: u64, extra: &str) {
    use pyrite::fabric::Population;
    let base = pyrite::config::parse_config_with(extra, &RunConfig::discrimination_defaults())
        .expect("bad inline config");
    for i in 0..n {
        let cfg = base.with_seed_offset(i);
        let rep = run_discrimination(&cfg).unwrap();
        println!(
            "=== seed {i}: winners {:?} correct {:?} means {:?}",
            rep.winners,
            rep.correct,
            rep.readout_means
                .iter()
                .map(|v| v.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        );
        for rec in &rep.recordings {
            if rec.label.starts_with("pause") || rec.label.starts_with("test_pause") {
                continue;
            }
            let dur = rec.duration.max(1e-9);
            let count = |pop: Population| rec.spikes(pop).len() as f64 / dur;
            let rrate = |idx: usize| {
                rec.spikes(Population::Readout)
                    .events()
                    .iter()
                    .filter(|e| e.channel == idx)
                    .count() as f64
                    / dur
            };
            let (mut net, mut exc, mut inh, mut m) = (0.0, 0.0, 0.0, 0u64);
            for s in &rec.apical {
                net += s.net;
                exc += s.excitation;
                inh += s.inhibition;
                m += 1;
            }
            let m = m.max(1) as f64;
            println!(
                "  {:22} P_total={:6.0} I_total={:6.0} R0={:5.0} R1={:5.0} apical net={:+.3} exc={:.3} inh={:.3}",
                rec.label,
                count(Population::Pyramidal),
                count(Population::Inter),
                rrate(0),
                rrate(1),
                net / m, exc / m, inh / m
            );
        }
        let last = rep.recordings.last().unwrap();
        let mut w_by_readout = vec![Vec::new(); 2];
        for r in &last.weights_end {
            if r.class == pyrite::fabric::ClassName::PyrToReadoutBasal {
                w_by_readout[r.post].push((r.w * 1000.0).round() / 1000.0);
            }
        }
        println!("  final w P->R0 {:?}  P->R1 {:?}", w_by_readout[0], w_by_readout[1]);
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "rec".into());
    let n: u64 = std::env::args()
        .nth(2)
        .map(|s| s.parse().unwrap())
        .unwrap_or(10);
    let extra = std::env::args().nth(3).unwrap_or_default();
    if mode == "phases" {
        phases(n, &extra);
    } else if mode == "disc-phases" {
        disc_phases(n, &extra);
    } else if mode == "rec" {
        let base = pyrite::config::parse_config_with(&extra, &RunConfig::recognition_defaults())
            .expect("bad inline config");
        let mut ls = Vec::new();
        let mut ds = Vec::new();
        let mut base_cal = Vec::new();
        let mut trained_cal = Vec::new();
        let mut ks = Vec::new();
        let mut cancel = Vec::new();
        let mut d_un = Vec::new();
        let mut ks_un = Vec::new();
        let mut cancel_un = Vec::new();
        for i in 0..n {
            let cfg = base.with_seed_offset(i);
            let rep = run_recognition(&cfg).unwrap();
            let ctl = run_recognition_control(&cfg).unwrap();
            ls.push(rep.l);
            ds.push(rep.d);
            base_cal.push(rep.phase_means[0].1);
            trained_cal.push(rep.phase_means[2].1);
            ks.push(rep.weight_shift);
            cancel.push(rep.apical_cancellation);
            d_un.push(ctl.d.abs());
            ks_un.push(ctl.weight_shift);
            cancel_un.push(ctl.apical_cancellation);
            println!(
                "seed {i}: L={:+8.3} D={:+8.3} ks={:.3} cancel={:.3} | untrained |D|={:.3} ks={:.3} cancel={:.3}",
                rep.l, rep.d, rep.weight_shift, rep.apical_cancellation, ctl.d.abs(), ctl.weight_shift, ctl.apical_cancellation
            );
        }
        let nl = ls.iter().filter(|l| **l > 0.0).count();
        let nd = ds.iter().filter(|d| **d > 0.0).count();
        let nks = ks.iter().filter(|k| **k > 0.2).count();
        let ncan = cancel.iter().filter(|c| **c < 0.7).count();
        println!("C1: L>0 {nl}/{n}, median trained {:.3} vs 1.5x base {:.3}", median(trained_cal.clone()), 1.5*median(base_cal.clone()));
        println!("C2: D>0 {nd}/{n}, median |D_untrained| {:.4} < 0.2*medD {:.4}", median(d_un.clone()), 0.2*median(ds.clone()));
        println!("C4: ks>0.2 {nks}/{n}, untrained ks all zero: {}", ks_un.iter().all(|k| *k == 0.0));
        println!("C5: cancel<0.7 {ncan}/{n}, untrained cancel median {:.3}", median(cancel_un.clone()));
    } else {
        let base = pyrite::config::parse_config_with(&extra, &RunConfig::discrimination_defaults())
            .expect("bad inline config");
        let mut correct_both = 0;
        let mut loser_fracs = Vec::new();
        let mut margins_un = Vec::new();
        for i in 0..n {
            let cfg = base.with_seed_offset(i);
            let rep = run_discrimination(&cfg).unwrap();
            let un = run_discrimination_untrained(&cfg).unwrap();
            let both = rep.correct.iter().all(|c| *c);
            if both {
                correct_both += 1;
            }
            for (p, means) in rep.readout_means.iter().enumerate() {
                let w = rep.winners[p];
                let loser: f64 = means
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != w)
                    .map(|(_, v)| *v)
                    .fold(f64::NEG_INFINITY, f64::max);
                if means[w] > 0.0 {
                    loser_fracs.push(loser.max(0.0) / means[w]);
                }
            }
            for m in &un.margins {
                if m.is_finite() {
                    margins_un.push(*m);
                }
            }
            println!(
                "seed {i}: winners {:?} correct {:?} margins {:?} means {:?}",
                rep.winners,
                rep.correct,
                rep.margins.iter().map(|m| (m * 100.0).round() / 100.0).collect::<Vec<_>>(),
                rep.readout_means
                    .iter()
                    .map(|v| v.iter().map(|x| (x * 100.0).round() / 100.0).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            );
        }
        println!(
            "C3: both-correct {correct_both}/{n}, median loser/winner {:.3}, untrained median margin {:.3}",
            median(loser_fracs),
            if margins_un.is_empty() { f64::NAN } else { median(margins_un) }
        );
    }
}
