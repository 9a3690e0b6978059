use std::collections::BTreeMap;

use super::AnalyzeError;
use crate::dot::{to_dot, DotOptions};
use crate::petri::PetriNet;

/// Magnitude span, in decades, from which intensities switch to log scale.
const LOG_DECADES: f64 = 3.0;

/// Diverging red/blue fill for a value with intensity in `[0, 1]`: zero is
/// white, positive values shade to red, negative ones to blue.
pub fn heat_color(value: f64, intensity: f64) -> String {
    let i = intensity.clamp(0.0, 1.0);
    let fade = (255.0 * (1.0 - i)).round() as u8;
    if value > 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else if value < 0.0 {
        format!("#{fade:02x}{fade:02x}ff")
    } else {
        "#ffffff".to_string()
    }
}

/// DOT rendering of `net` with transitions colored by sensitivity.
pub fn sensitivity_heatmap(
    net: &PetriNet,
    sens: &BTreeMap<String, f64>,
) -> Result<String, AnalyzeError> {
    if let Some(k) = sens.keys().find(|k| net.transition_index(k).is_none()) {
        return Err(AnalyzeError::UnknownTransition(k.clone()));
    }
    let mags: Vec<f64> = sens
        .values()
        .map(|v| v.abs())
        .filter(|m| *m > 0.0 && m.is_finite())
        .collect();
    let max = mags.iter().copied().fold(0.0, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let log = max > 0.0 && (max / min).log10() >= LOG_DECADES;
    let intensity = |v: f64| -> f64 {
        let m = v.abs();
        if m == 0.0 || max == 0.0 {
            0.0
        } else if !m.is_finite() {
            1.0
        } else if log {
            let (lo, hi) = (min.log10(), max.log10());
            (m.log10() - lo + 1.0) / (hi - lo + 1.0)
        } else {
            m / max
        }
    };

    let mut opts = DotOptions::named("sensitivity");
    opts.comments
        .push("sensitivity heatmap: red = positive, blue = negative, white = zero".into());
    opts.comments.push(if log {
        format!("intensity = (log10|v| - log10 {min:e} + 1) / (log10 {max:e} - log10 {min:e} + 1)")
    } else {
        format!("intensity = |v| / {max:e}")
    });
    for t in &net.transitions {
        if let Some(&v) = sens.get(&t.name) {
            opts.comments.push(format!("{}: {v:e}", t.name));
            opts.transition_fill
                .insert(t.name.clone(), heat_color(v, intensity(v)));
        }
    }
    Ok(to_dot(net, &opts))
}
