pub mod action;
pub mod commands;
pub mod items;
pub mod recipes;
pub mod terrain;
pub mod world;

pub use action::{Action, Dir, Pitch};
pub use commands::{apply_all, InitCommand};
pub use items::{Block, ToolTier};
pub use recipes::{Recipe, RecipeGraph, Station};
pub use terrain::{generate, Layout, TerrainConfig};
pub use world::{StepRecord, World};
