//! In-memory FIFO channels between the three parties, plus the message and
//! primitive accounting that the complexity checks read.

use std::collections::VecDeque;
use std::ops::Sub;

use serde::Serialize;

use super::share::PartyId;

/// Primitive invocation counts. Vector operations count one per element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Protocol-level secure multiplications.
    pub mul: u64,
    /// Secure equality tests against a public value.
    pub eq: u64,
    /// Secure comparisons (LT, GT, GTE and sign tests).
    pub cmp: u64,
    /// Fixed-point truncations.
    pub trunc: u64,
    /// Random bits drawn for DP randomness.
    pub rand_bit: u64,
    /// Random bits drawn to mask openings inside comparison gadgets.
    pub mask_bit: u64,
    /// Ring multiplications with resharing, including those inside gadgets.
    pub mul_gates: u64,
    /// Elements opened to all parties.
    pub open: u64,
    /// Elements revealed to party 1.
    pub reveal: u64,
    /// Elements secret-shared by a data holder or dealer.
    pub input: u64,
    /// Share assignments performed while joining holder data.
    pub join_assign: u64,
}

impl Sub for Counters {
    type Output = Counters;
    fn sub(self, o: Counters) -> Counters {
        Counters {
            mul: self.mul - o.mul,
            eq: self.eq - o.eq,
            cmp: self.cmp - o.cmp,
            trunc: self.trunc - o.trunc,
            rand_bit: self.rand_bit - o.rand_bit,
            mask_bit: self.mask_bit - o.mask_bit,
            mul_gates: self.mul_gates - o.mul_gates,
            open: self.open - o.open,
            reveal: self.reveal - o.reveal,
            input: self.input - o.input,
            join_assign: self.join_assign - o.join_assign,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MessageRecord {
    pub round: u64,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PartyTraffic {
    pub sent_messages: u64,
    pub sent_bytes: u64,
    pub received_messages: u64,
    pub received_bytes: u64,
}

/// Aggregate view of a transcript, suitable for run logs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TranscriptSummary {
    pub rounds: u64,
    pub messages: u64,
    pub bytes: u64,
    pub per_party: [PartyTraffic; 3],
    pub counters: Counters,
}

/// Ordered message log plus counters.
#[derive(Clone, Debug, Default)]
pub struct Transcript {
    records: Vec<MessageRecord>,
    keep_records: bool,
    summary: TranscriptSummary,
}

impl Transcript {
    fn new(keep_records: bool) -> Transcript {
        Transcript { keep_records, ..Default::default() }
    }

    fn log(&mut self, round: u64, from: usize, to: usize, bytes: u64) {
        let s = &mut self.summary;
        s.messages += 1;
        s.bytes += bytes;
        s.per_party[from].sent_messages += 1;
        s.per_party[from].sent_bytes += bytes;
        s.per_party[to].received_messages += 1;
        s.per_party[to].received_bytes += bytes;
        if self.keep_records {
            self.records.push(MessageRecord {
                round,
                sender: PartyId::from_slot(from),
                receiver: PartyId::from_slot(to),
                bytes,
            });
        }
    }

    /// All messages in send order. Empty when record keeping is disabled.
    pub fn records(&self) -> &[MessageRecord] {
        &self.records
    }

    /// Messages sent or received by `party`, in order.
    pub fn party_log(&self, party: PartyId) -> Vec<MessageRecord> {
        self.records.iter().filter(|r| r.sender == party || r.receiver == party).copied().collect()
    }

    pub fn counters(&self) -> &Counters {
        &self.summary.counters
    }

    pub(crate) fn counters_mut(&mut self) -> &mut Counters {
        &mut self.summary.counters
    }

    pub fn summary(&self) -> &TranscriptSummary {
        &self.summary
    }

    pub fn is_recording(&self) -> bool {
        self.keep_records
    }

    /// Full transcript as JSON: summary plus every message record.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "summary": self.summary,
            "messages": self.records,
        })
    }
}

/// Reliable, ordered, in-memory channels for every ordered party pair.
#[derive(Debug)]
pub(crate) struct Network {
    queues: [[VecDeque<Vec<u64>>; 3]; 3],
    round: u64,
    pub transcript: Transcript,
}

impl Network {
    pub fn new(keep_records: bool) -> Network {
        Network { queues: Default::default(), round: 0, transcript: Transcript::new(keep_records) }
    }

    /// Starts a new communication round.
    pub fn begin_round(&mut self) {
        self.round += 1;
        self.transcript.summary.rounds = self.round;
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Rewinds or advances the round counter; used to run independent
    /// batches side by side in the same rounds.
    pub fn set_round(&mut self, round: u64) {
        self.round = round;
        self.transcript.summary.rounds = self.transcript.summary.rounds.max(round);
    }

    pub fn send(&mut self, from: usize, to: usize, payload: Vec<u64>) {
        let bytes = 8 * payload.len() as u64;
        self.transcript.log(self.round, from, to, bytes);
        self.queues[from][to].push_back(payload);
    }

    pub fn recv(&mut self, from: usize, to: usize) -> Vec<u64> {
        self.queues[from][to]
            .pop_front()
            .unwrap_or_else(|| panic!("party {} expected a message from party {}", to + 1, from + 1))
    }

    pub fn idle(&self) -> bool {
        self.queues.iter().flatten().all(VecDeque::is_empty)
    }
}
