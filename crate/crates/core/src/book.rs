// Chapters of the guide under book/, compiled as doc-tests so every snippet
// stays in sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/units-and-noise.md")]
mod units_and_noise {}
#[doc = include_str!("../../../book/src/coefficients.md")]
mod coefficients {}
#[doc = include_str!("../../../book/src/channel.md")]
mod channel {}
#[doc = include_str!("../../../book/src/bounds.md")]
mod bounds {}
#[doc = include_str!("../../../book/src/regions.md")]
mod regions {}
#[doc = include_str!("../../../book/src/verification.md")]
mod verification {}
#[doc = include_str!("../../../book/src/command-line.md")]
mod command_line {}

#[doc = include_str!("../../../README.md")]
mod readme {}
