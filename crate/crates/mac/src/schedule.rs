use rand::seq::index;
use rand::Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("cannot pick {k} slots from a frame of {v}")]
    TooManySlots { k: u32, v: u32 },
}

/// `⌊p·v⌋ + 1` with probability `p·v − ⌊p·v⌋`, else `⌊p·v⌋`, clamped to `v`.
pub fn draw_slot_count(p: f64, v: u32, rng: &mut impl Rng) -> u32 {
    let pv = p.clamp(0.0, 1.0) * f64::from(v);
    let base = pv.floor();
    let pi = pv - base;
    let k = base as u32 + u32::from(pi > 0.0 && rng.gen_bool(pi));
    k.min(v)
}

/// Uniform `k`-subset of `0..v`, ascending.
pub fn build_schedule(k: u32, v: u32, rng: &mut impl Rng) -> Result<Vec<u32>, ScheduleError> {
    if k > v {
        return Err(ScheduleError::TooManySlots { k, v });
    }
    let mut slots: Vec<u32> = index::sample(rng, v as usize, k as usize)
        .into_iter()
        .map(|s| s as u32)
        .collect();
    slots.sort_unstable();
    Ok(slots)
}

/// The (k, v) schedule of one node for the current frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    v: u32,
    p: f64,
    k: u32,
    slots: Vec<bool>,
}

impl Schedule {
    pub fn new(v: u32) -> Self {
        Self {
            v,
            p: 0.0,
            k: 0,
            slots: vec![false; v as usize],
        }
    }

    pub fn persistence(&self) -> f64 {
        self.p
    }

    /// Slot count drawn for the current frame.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn frame_len(&self) -> u32 {
        self.v
    }

    pub fn is_scheduled(&self, position: u32) -> bool {
        self.slots.get(position as usize).copied().unwrap_or(false)
    }

    pub fn scheduled_slots(&self) -> impl Iterator<Item = u32> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i as u32)
    }

    /// Fresh draw at persistence `p` for a frame that starts now.
    pub fn begin_frame(&mut self, p: f64, rng: &mut impl Rng) {
        self.p = p;
        self.redraw_from(0, rng);
    }

    /// Adopt `p` at frame position `position`. The slots from `position` on are
    /// re-drawn with a count pro-rated to the rest of the frame; earlier slots
    /// are left as they were. Returns whether anything changed.
    pub fn set_persistence(&mut self, p: f64, position: u32, rng: &mut impl Rng) -> bool {
        if p == self.p {
            return false;
        }
        self.p = p;
        self.redraw_from(position.min(self.v), rng);
        true
    }

    fn redraw_from(&mut self, position: u32, rng: &mut impl Rng) {
        let k = draw_slot_count(self.p, self.v, rng);
        self.k = k;
        let remaining = self.v - position;
        let target = if position == 0 {
            k
        } else {
            ((f64::from(k) * f64::from(remaining) / f64::from(self.v)).round() as u32)
                .min(remaining)
        };
        for s in &mut self.slots[position as usize..] {
            *s = false;
        }
        for s in build_schedule(target, remaining, rng).expect("target fits the remainder") {
            self.slots[(position + s) as usize] = true;
        }
    }
}
