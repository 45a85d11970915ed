use crate::noise::NoiseAxis;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent seeds for the noise draw and the training run of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunSeeds {
    pub noise: u64,
    pub train: u64,
}

/// Seeds for cell `(axis, level, repeat)`.
///
/// The cell coordinates are packed losslessly into one word and pushed
/// through bijections, so distinct cells never share a seed under one base.
pub fn run_seeds(base_seed: u64, axis: NoiseAxis, level: usize, repeat: usize) -> RunSeeds {
    assert!(level < 1 << 31, "level index {level} too large");
    assert!(repeat < 1 << 32, "repeat index {repeat} too large");
    let axis_bit = match axis {
        NoiseAxis::Feature => 0u64,
        NoiseAxis::Structure => 1u64,
    };
    let code = (axis_bit << 63) | ((level as u64) << 32) | repeat as u64;
    let cell = splitmix64(base_seed.wrapping_add(splitmix64(code)));
    RunSeeds {
        noise: cell,
        train: splitmix64(cell),
    }
}
