//! Scenario presets shipped with the binary.

pub const NAMES: [&str; 4] = ["harmonic", "inverted_oscillator", "double_well_driven", "cat_decoherence"];

/// Raw TOML of a preset.
pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "harmonic" => include_str!("../presets/harmonic.toml"),
        "inverted_oscillator" => include_str!("../presets/inverted_oscillator.toml"),
        "double_well_driven" => include_str!("../presets/double_well_driven.toml"),
        "cat_decoherence" => include_str!("../presets/cat_decoherence.toml"),
        _ => return None,
    })
}
