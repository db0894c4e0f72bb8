//! Scenario files shipped with the binary.

use crate::config::{parse_config, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// One ring spanned by a disk.
    Ring,
    /// Two unit rings forming a Hopf link.
    Hopf,
    /// Rigid ring with a light, twisted loop hanging through it.
    ClampedPlusFree,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Ring, Preset::Hopf, Preset::ClampedPlusFree];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Ring => "ring",
            Preset::Hopf => "hopf",
            Preset::ClampedPlusFree => "clamped-plus-free",
        }
    }

    /// The scenario file text.
    pub fn text(self) -> &'static str {
        match self {
            Preset::Ring => include_str!("../presets/ring.cfg"),
            Preset::Hopf => include_str!("../presets/hopf.cfg"),
            Preset::ClampedPlusFree => include_str!("../presets/clamped-plus-free.cfg"),
        }
    }

    pub fn config(self) -> ScenarioConfig {
        parse_config(self.text()).expect("shipped presets parse")
    }
}
