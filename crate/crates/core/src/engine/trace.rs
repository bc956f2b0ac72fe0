use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PartyId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyRecord {
    pub id: PartyId,
    pub wake_slot: u64,
    pub success_slot: Option<u64>,
}

impl PartyRecord {
    /// `t_u^succ - t_u`, if the party succeeded.
    pub fn latency(&self) -> Option<u64> {
        self.success_slot.map(|s| s - self.wake_slot)
    }

    /// Member of `Â[t]`: woken strictly before `t`.
    pub fn is_woken_before(&self, t: u64) -> bool {
        self.wake_slot < t
    }

    /// Member of `Succ[t]`: succeeded strictly before `t`.
    pub fn succeeded_before(&self, t: u64) -> bool {
        self.success_slot.is_some_and(|s| s < t)
    }

    /// Member of `A[t]`: woken before `t` and still unsuccessful at `t`.
    pub fn is_active_at(&self, t: u64) -> bool {
        self.is_woken_before(t) && !self.succeeded_before(t)
    }
}

/// One slot of channel activity. `wakeups` counts parties that became
/// eligible in this slot, i.e. those woken at `slot - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: u64,
    pub wakeups: u64,
    pub transmitter_count: u64,
    pub success_party: Option<PartyId>,
}

impl SlotRecord {
    pub fn silent(slot: u64) -> Self {
        Self {
            slot,
            ..Self::default()
        }
    }

    pub fn is_silent(&self) -> bool {
        self.wakeups == 0 && self.transmitter_count == 0
    }
}

/// Full record of one run.
///
/// `slots` is sparse: only slots with wakeups or transmissions are stored, in
/// increasing order. Every other slot in `1..=horizon` was silent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub parties: Vec<PartyRecord>,
    pub slots: Vec<SlotRecord>,
    pub horizon: u64,
    pub seed: u64,
    pub prng: &'static str,
}

impl ExecutionTrace {
    /// The record of slot `t`, synthesizing a silent one when nothing happened.
    pub fn slot(&self, t: u64) -> SlotRecord {
        slot_lookup(&self.slots, t)
    }

    pub fn party(&self, id: PartyId) -> Result<&PartyRecord> {
        // Ids are dense and assigned in order.
        self.parties
            .get(id as usize)
            .filter(|p| p.id == id)
            .ok_or(Error::UnknownParty(id))
    }

    pub fn latency_of(&self, id: PartyId) -> Result<Option<u64>> {
        Ok(self.party(id)?.latency())
    }

    pub fn success_count(&self) -> usize {
        self.parties.iter().filter(|p| p.success_slot.is_some()).count()
    }

    pub fn successes(&self) -> impl Iterator<Item = &PartyRecord> {
        self.parties.iter().filter(|p| p.success_slot.is_some())
    }

    /// `A[t]`.
    pub fn active_at(&self, t: u64) -> impl Iterator<Item = &PartyRecord> {
        self.parties.iter().filter(move |p| p.is_active_at(t))
    }

    /// `Succ[t]`.
    pub fn succeeded_before(&self, t: u64) -> impl Iterator<Item = &PartyRecord> {
        self.parties.iter().filter(move |p| p.succeeded_before(t))
    }

    /// Writes `slot,wakeups,transmitters,success_party` rows for the stored
    /// (non-silent) slots.
    pub fn write_slots_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "wakeups", "transmitters", "success_party"])?;
        for s in &self.slots {
            w.write_record([
                s.slot.to_string(),
                s.wakeups.to_string(),
                s.transmitter_count.to_string(),
                s.success_party.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `id,wake_slot,success_slot` rows; unsuccessful parties leave
    /// the last column empty.
    pub fn write_parties_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "wake_slot", "success_slot"])?;
        for p in &self.parties {
            w.write_record([
                p.id.to_string(),
                p.wake_slot.to_string(),
                p.success_slot.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds a trace from exported CSVs. Slot records are optional since
    /// every contention and goodness quantity derives from the parties alone.
    pub fn from_csv<R: Read, S: Read>(parties: R, slots: Option<S>, horizon: u64, seed: u64) -> Result<Self> {
        let parties = read_parties_csv(parties)?;
        let slots = match slots {
            Some(r) => read_slots_csv(r)?,
            None => Vec::new(),
        };
        Ok(Self {
            parties,
            slots,
            horizon,
            seed,
            prng: crate::seed::PRNG_NAME,
        })
    }
}

pub(crate) fn slot_lookup(slots: &[SlotRecord], t: u64) -> SlotRecord {
    slots
        .binary_search_by_key(&t, |s| s.slot)
        .map(|i| slots[i])
        .unwrap_or_else(|_| SlotRecord::silent(t))
}

fn parse_opt(field: &str) -> Result<Option<u64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_u64(field).map(Some)
    }
}

fn parse_u64(field: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected an integer, got {field:?}")))
}

fn read_parties_csv<R: Read>(input: R) -> Result<Vec<PartyRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut parties = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 3 {
            return Err(Error::Parse(format!("parties row has {} fields, expected 3", row.len())));
        }
        let id = parse_u64(&row[0])?;
        if id != parties.len() as u64 {
            return Err(Error::Parse(format!("party ids must be dense and ordered; got {id}")));
        }
        let wake_slot = parse_u64(&row[1])?;
        let success_slot = parse_opt(row[2].trim())?;
        if success_slot.is_some_and(|s| s <= wake_slot) {
            return Err(Error::Parse(format!("party {id} succeeds before waking")));
        }
        parties.push(PartyRecord {
            id,
            wake_slot,
            success_slot,
        });
    }
    Ok(parties)
}

fn read_slots_csv<R: Read>(input: R) -> Result<Vec<SlotRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut slots: Vec<SlotRecord> = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 4 {
            return Err(Error::Parse(format!("slots row has {} fields, expected 4", row.len())));
        }
        let rec = SlotRecord {
            slot: parse_u64(&row[0])?,
            wakeups: parse_u64(&row[1])?,
            transmitter_count: parse_u64(&row[2])?,
            success_party: parse_opt(row[3].trim())?,
        };
        if slots.last().is_some_and(|prev| prev.slot >= rec.slot) {
            return Err(Error::Parse("slot rows must be strictly increasing".into()));
        }
        slots.push(rec);
    }
    Ok(slots)
}

/// The public history `H_t` an adaptive adversary observes before deciding
/// how many parties to wake at `wake_slot`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub wake_slot: u64,
    pub woken_so_far: u64,
    pub(crate) slots: &'a [SlotRecord],
}

impl<'a> History<'a> {
    /// Record of an already simulated slot (`t <= wake_slot`).
    pub fn slot(&self, t: u64) -> SlotRecord {
        slot_lookup(self.slots, t)
    }

    pub fn recorded(&self) -> &'a [SlotRecord] {
        self.slots
    }

    pub fn successes_so_far(&self) -> usize {
        self.slots.iter().filter(|s| s.success_party.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExecutionTrace {
        ExecutionTrace {
            parties: vec![
                PartyRecord { id: 0, wake_slot: 0, success_slot: Some(3) },
                PartyRecord { id: 1, wake_slot: 5, success_slot: Some(12) },
                PartyRecord { id: 2, wake_slot: 5, success_slot: None },
            ],
            slots: vec![
                SlotRecord { slot: 1, wakeups: 1, transmitter_count: 0, success_party: None },
                SlotRecord { slot: 3, wakeups: 0, transmitter_count: 1, success_party: Some(0) },
                SlotRecord { slot: 6, wakeups: 2, transmitter_count: 2, success_party: None },
                SlotRecord { slot: 12, wakeups: 0, transmitter_count: 1, success_party: Some(1) },
            ],
            horizon: 20,
            seed: 9,
            prng: crate::seed::PRNG_NAME,
        }
    }

    #[test]
    fn latency_lookup() {
        let t = sample();
        assert_eq!(t.latency_of(1).unwrap(), Some(7));
        assert_eq!(t.latency_of(2).unwrap(), None);
        assert!(matches!(t.latency_of(7), Err(Error::UnknownParty(7))));
    }

    #[test]
    fn active_and_success_sets() {
        let t = sample();
        assert_eq!(t.active_at(3).count(), 1);
        assert_eq!(t.active_at(4).count(), 0);
        assert_eq!(t.active_at(6).count(), 2);
        assert_eq!(t.succeeded_before(13).count(), 2);
        assert_eq!(t.slot(2), SlotRecord::silent(2));
        assert_eq!(t.slot(6).wakeups, 2);
    }

    #[test]
    fn csv_roundtrip() {
        let t = sample();
        let (mut p, mut s) = (Vec::new(), Vec::new());
        t.write_parties_csv(&mut p).unwrap();
        t.write_slots_csv(&mut s).unwrap();
        assert!(String::from_utf8(s.clone()).unwrap().starts_with("slot,wakeups,transmitters,success_party\n"));
        let back = ExecutionTrace::from_csv(&p[..], Some(&s[..]), 20, 9).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_inconsistent_parties() {
        let bad = "id,wake_slot,success_slot\n0,5,5\n";
        assert!(ExecutionTrace::from_csv(bad.as_bytes(), None::<&[u8]>, 10, 0).is_err());
        let gap = "id,wake_slot,success_slot\n1,0,\n";
        assert!(ExecutionTrace::from_csv(gap.as_bytes(), None::<&[u8]>, 10, 0).is_err());
    }
}
