//! Checked-in configurations, one per figure of the reference study.

const PRESETS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../presets/fig1a.toml")),
    ("fig1b", include_str!("../../presets/fig1b.toml")),
    ("fig2", include_str!("../../presets/fig2.toml")),
    ("fig3", include_str!("../../presets/fig3.toml")),
    ("fig5", include_str!("../../presets/fig5.toml")),
    ("fig6", include_str!("../../presets/fig6.toml")),
    ("fig8", include_str!("../../presets/fig8.toml")),
    ("fig8b", include_str!("../../presets/fig8b.toml")),
    ("fig9a", include_str!("../../presets/fig9a.toml")),
    ("fig9b", include_str!("../../presets/fig9b.toml")),
    ("weighted", include_str!("../../presets/weighted.toml")),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// TOML source of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
