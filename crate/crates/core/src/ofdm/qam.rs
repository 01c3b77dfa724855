//! Gray-mapped 4-QAM with unit average symbol energy.

use std::f64::consts::FRAC_1_SQRT_2;

use super::C64;

/// Maps bit pairs to symbols: first bit selects the real sign, second bit
/// the imaginary sign (0 → +, 1 → −). An odd trailing bit is paired with 0.
pub fn qam4_modulate(bits: &[u8]) -> Vec<C64> {
    bits.chunks(2)
        .map(|pair| {
            let b0 = pair[0] & 1;
            let b1 = pair.get(1).copied().unwrap_or(0) & 1;
            let re = if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            C64::new(re, im)
        })
        .collect()
}

/// Per-axis sign decisions.
pub fn qam4_demodulate(symbols: &[C64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        bits.push(u8::from(s.re < 0.0));
        bits.push(u8::from(s.im < 0.0));
    }
    bits
}
