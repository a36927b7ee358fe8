// mdbook cannot run listings that depend on workspace crates, so every
// chapter is included here as module docs and `cargo test --doc` runs them.
// A failing doctest names the module, which names the chapter.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/model.md")]
pub mod model {}
#[doc = include_str!("src/oracles.md")]
pub mod oracles {}
#[doc = include_str!("src/votes.md")]
pub mod votes {}
#[doc = include_str!("src/booster.md")]
pub mod booster {}
#[doc = include_str!("src/process.md")]
pub mod process {}
#[doc = include_str!("src/game.md")]
pub mod game {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
#[doc = include_str!("src/verification.md")]
pub mod verification {}
