//! Authoring studio for chart-based multiple-choice questions, with
//! simulated student cohorts and analytics over their answers.

pub mod alignment;
pub mod clock;
pub mod cohort;
pub mod features;
pub mod gateway;
pub mod question;
pub mod reasoning;
pub mod render;
pub mod store;
pub mod studio;
pub mod students;
pub mod table;
pub mod templates;
