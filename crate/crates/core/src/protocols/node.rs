use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotStatus {
    #[default]
    Free,
    /// Waiting for the herald of an attempt.
    PendingHerald,
    /// Holding a heralded raw state (mEPL first stage output).
    HoldingRawState,
}

impl fmt::Display for SlotStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlotStatus::Free => "free",
            SlotStatus::PendingHerald => "pending-herald",
            SlotStatus::HoldingRawState => "holding-raw-state",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemorySlot {
    pub status: SlotStatus,
    pub attempt_id: u64,
    /// Attempts made by other qubits since this slot started holding a raw
    /// state. Only advances while `status` is `HoldingRawState`.
    pub attempts_since_stored: u64,
}

/// Occupancy ledger for one node: the communication qubit plus `N - 1` memories.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub comm_busy_until: f64,
    pub comm: MemorySlot,
    pub memories: Vec<MemorySlot>,
}

impl NodeState {
    pub fn new(n_qubits: u32) -> Self {
        Self {
            comm_busy_until: 0.0,
            comm: MemorySlot::default(),
            memories: vec![MemorySlot::default(); n_qubits.saturating_sub(1) as usize],
        }
    }

    /// Qubit 0 is the communication qubit, qubit `i > 0` is memory `i - 1`.
    pub fn qubit_mut(&mut self, qubit: usize) -> &mut MemorySlot {
        if qubit == 0 {
            &mut self.comm
        } else {
            &mut self.memories[qubit - 1]
        }
    }

    pub fn qubit(&self, qubit: usize) -> &MemorySlot {
        if qubit == 0 {
            &self.comm
        } else {
            &self.memories[qubit - 1]
        }
    }

    pub fn occupied_memories(&self) -> usize {
        self.memories.iter().filter(|m| m.status != SlotStatus::Free).count()
    }

    pub fn free_memories(&self) -> usize {
        self.memories.iter().filter(|m| m.status == SlotStatus::Free).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupancy_counts() {
        let mut n = NodeState::new(4);
        assert_eq!((n.occupied_memories(), n.free_memories()), (0, 3));
        n.qubit_mut(2).status = SlotStatus::HoldingRawState;
        n.qubit_mut(0).status = SlotStatus::PendingHerald;
        assert_eq!((n.occupied_memories(), n.free_memories()), (1, 2));
        assert_eq!(NodeState::new(1).memories.len(), 0);
    }
}
