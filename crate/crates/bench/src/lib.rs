//! Fixtures shared by the criterion benches.

use qmux_core::{McSettings, NetworkParams, ProtocolConfig, StopRule};

/// The four protocol configurations of the rate-vs-distance sweep.
pub fn sweep_protocols() -> [ProtocolConfig; 4] {
    [
        ProtocolConfig::mbk(2),
        ProtocolConfig::mepl(2),
        ProtocolConfig::mps(0.01),
        ProtocolConfig::mps(0.1),
    ]
}

pub fn table1() -> NetworkParams {
    NetworkParams::default()
}

/// A small replication budget that keeps one bench iteration in the
/// millisecond range.
pub fn quick_mc(successes: u64) -> McSettings {
    McSettings {
        replications: 4,
        stop: StopRule::Successes(successes),
        base_seed: 1,
    }
}
