//! Input pattern and teacher-signal generation.
//!
//! Patterns are drawn in continuous time, snapped to the simulation grid
//! (collisions on the same channel are re-drawn) and tiled periodically by
//! the experiment protocols. All generation is seed-deterministic.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A single spike on an input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    /// Event time in seconds.
    pub t: f64,
    /// Channel index, always below the train's channel count.
    pub channel: usize,
}

/// Time-ordered spike events over a fixed set of channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    channels: usize,
    events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    pub fn empty(channels: usize) -> Self {
        SpikeTrain {
            channels,
            events: Vec::new(),
        }
    }

    /// Builds a train from raw events, enforcing ordering, channel range
    /// and uniqueness of (time, channel) pairs.
    pub fn from_events(channels: usize, events: Vec<SpikeEvent>) -> Result<Self> {
        let mut prev: Option<&SpikeEvent> = None;
        for (i, ev) in events.iter().enumerate() {
            if !ev.t.is_finite() || ev.t < 0.0 {
                return Err(Error::Contract(format!(
                    "spike train event {i} has invalid time {}",
                    ev.t
                )));
            }
            if ev.channel >= channels {
                return Err(Error::Contract(format!(
                    "spike train event {i} uses channel {} of {}",
                    ev.channel, channels
                )));
            }
            if let Some(p) = prev {
                if ev.t < p.t {
                    return Err(Error::Contract(format!(
                        "spike train times decrease at event {i}"
                    )));
                }
                if ev.t == p.t && ev.channel == p.channel {
                    return Err(Error::Contract(format!(
                        "duplicate (time, channel) pair at event {i}"
                    )));
                }
            }
            prev = Some(ev);
        }
        Ok(SpikeTrain { channels, events })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Repeats the tile `[0, tile_duration)` until `total_duration`.
    /// Event times in tile k are exactly tile-0 times plus `k * tile_duration`.
    pub fn tiled(&self, tile_duration: f64, total_duration: f64) -> SpikeTrain {
        let mut events = Vec::new();
        if !self.events.is_empty() && tile_duration > 0.0 {
            let mut k = 0u64;
            while k as f64 * tile_duration < total_duration {
                let offset = k as f64 * tile_duration;
                for ev in &self.events {
                    let t = ev.t + offset;
                    if t < total_duration {
                        events.push(SpikeEvent {
                            t,
                            channel: ev.channel,
                        });
                    }
                }
                k += 1;
            }
        }
        SpikeTrain {
            channels: self.channels,
            events,
        }
    }

    /// Moves every event onto one channel of a wider train. Used to direct
    /// the teacher at a single readout.
    pub fn retarget(&self, channel: usize, channels: usize) -> Result<SpikeTrain> {
        let events = self
            .events
            .iter()
            .map(|ev| SpikeEvent { t: ev.t, channel })
            .collect();
        SpikeTrain::from_events(channels, events)
    }

    /// Copies every event onto all channels of a wider train. Used to drive
    /// every readout with the same teacher.
    pub fn broadcast(&self, channels: usize) -> Result<SpikeTrain> {
        let mut events = Vec::with_capacity(self.events.len() * channels);
        for ev in &self.events {
            for c in 0..channels {
                events.push(SpikeEvent {
                    t: ev.t,
                    channel: c,
                });
            }
        }
        SpikeTrain::from_events(channels, events)
    }

    /// Serializes as CSV with header `t_seconds,channel`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_seconds,channel\n");
        for ev in &self.events {
            out.push_str(&crate::csvio::fmt_sig9(ev.t));
            out.push(',');
            out.push_str(&ev.channel.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the `t_seconds,channel` CSV schema. Errors carry the
    /// offending row number.
    pub fn from_csv(text: &str, channels: usize, path: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == "t_seconds,channel" => {}
            _ => {
                return Err(Error::Malformed {
                    path: path.to_string(),
                    row: 1,
                    message: "expected header `t_seconds,channel`".to_string(),
                })
            }
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let row = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (t, channel) = match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(c), None) => (t, c),
                _ => {
                    return Err(Error::Malformed {
                        path: path.to_string(),
                        row,
                        message: "expected two fields".to_string(),
                    })
                }
            };
            let t: f64 = t.trim().parse().map_err(|_| Error::Malformed {
                path: path.to_string(),
                row,
                message: format!("bad time `{t}`"),
            })?;
            let channel: usize = channel.trim().parse().map_err(|_| Error::Malformed {
                path: path.to_string(),
                row,
                message: format!("bad channel `{channel}`"),
            })?;
            events.push(SpikeEvent { t, channel });
        }
        SpikeTrain::from_events(channels, events).map_err(|e| Error::Malformed {
            path: path.to_string(),
            row: 0,
            message: e.to_string(),
        })
    }
}

/// Parameters of a synthetic spatio-temporal pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub channels: usize,
    /// Tile duration in seconds.
    pub duration: f64,
    pub n_spikes: usize,
    pub seed: u64,
    pub periodic: bool,
    /// Snap grid in seconds, normally the engine step.
    pub grid: f64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        PatternSpec {
            channels: 32,
            duration: 0.2,
            n_spikes: 128,
            seed: 1,
            periodic: true,
            grid: 1e-4,
        }
    }
}

impl PatternSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 1 {
            return Err(Error::invalid("stimulus.channels", "must be >= 1"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::invalid("stimulus.duration", "must be > 0"));
        }
        if !(self.grid > 0.0) || self.grid >= self.duration {
            return Err(Error::invalid(
                "engine.dt",
                "pattern grid must be > 0 and smaller than the pattern duration",
            ));
        }
        let slots = (self.duration / self.grid).floor() as usize;
        if self.n_spikes > self.channels * slots {
            return Err(Error::invalid(
                "stimulus.n_spikes",
                "more spikes than grid slots available",
            ));
        }
        Ok(())
    }
}

/// Draws exactly `n_spikes` events uniformly over channels x [0, duration),
/// snapped to the grid, sorted by time then channel.
pub fn generate_pattern(spec: &PatternSpec) -> Result<SpikeTrain> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut taken: HashSet<(usize, u64)> = HashSet::with_capacity(spec.n_spikes);
    let mut events = Vec::with_capacity(spec.n_spikes);
    while events.len() < spec.n_spikes {
        let channel = rng.gen_range(0..spec.channels);
        let t_raw: f64 = rng.gen_range(0.0..spec.duration);
        let slot = (t_raw / spec.grid).round() as u64;
        // Times are canonicalized to their nine-digit CSV form so exported
        // patterns re-import bit-identically.
        let t = crate::csvio::canon9(slot as f64 * spec.grid);
        if t >= spec.duration {
            continue;
        }
        if taken.insert((channel, slot)) {
            events.push(SpikeEvent { t, channel });
        }
    }
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap().then(a.channel.cmp(&b.channel)));
    SpikeTrain::from_events(spec.channels, events)
}

/// Same statistics as `generate_pattern`, different placement.
pub fn deviant_pattern(spec: &PatternSpec, alt_seed: u64) -> Result<SpikeTrain> {
    if alt_seed == spec.seed {
        return Err(Error::Contract(
            "deviant pattern requires a seed different from the original".to_string(),
        ));
    }
    let mut alt = spec.clone();
    alt.seed = alt_seed;
    generate_pattern(&alt)
}

/// Regular (clock-like) teacher train on a single channel, first spike at
/// half the inter-spike interval.
pub fn generate_teacher(rate: f64, duration: f64) -> Result<SpikeTrain> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::invalid("stimulus.teacher_rate", "must be >= 0"));
    }
    if rate == 0.0 {
        return Ok(SpikeTrain::empty(1));
    }
    let interval = 1.0 / rate;
    let mut events = Vec::new();
    let mut k = 0u64;
    loop {
        let t = crate::csvio::canon9((k as f64 + 0.5) * interval);
        if t >= duration {
            break;
        }
        events.push(SpikeEvent { t, channel: 0 });
        k += 1;
    }
    SpikeTrain::from_events(1, events)
}

/// Poisson teacher variant, selectable through configuration.
pub fn generate_teacher_poisson(rate: f64, duration: f64, seed: u64) -> Result<SpikeTrain> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::invalid("stimulus.teacher_rate", "must be >= 0"));
    }
    if rate == 0.0 {
        return Ok(SpikeTrain::empty(1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen_range(0.0f64..1.0).max(f64::MIN_POSITIVE);
        t -= u.ln() / rate;
        if t >= duration {
            break;
        }
        events.push(SpikeEvent {
            t: crate::csvio::canon9(t),
            channel: 0,
        });
    }
    SpikeTrain::from_events(1, events)
}
