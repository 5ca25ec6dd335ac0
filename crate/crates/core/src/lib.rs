pub mod actions;
pub mod llm;
pub mod npc;
pub mod quest;
pub mod session;
pub mod world;
