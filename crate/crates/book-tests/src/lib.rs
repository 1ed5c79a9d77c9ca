//! Every code listing in the guide runs as a doctest of this crate.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/mittag-leffler.md")]
pub mod mittag_leffler {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/fractional-integral.md")]
pub mod fractional_integral {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/method-of-steps.md")]
pub mod method_of_steps {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cross-check.md")]
pub mod cross_check {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/growth.md")]
pub mod growth {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/expressions.md")]
pub mod expressions {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
