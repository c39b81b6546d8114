//! The adaptive checklist: an ordered list of sub-goals that guides expansion
//! and is updated from progress feedback.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::ProgressFeedback;
use crate::text::normalize_key;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChecklistError {
    #[error("no sub-goals could be extracted from the checklist text")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalStatus {
    Unsolved,
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalOrigin {
    Initial,
    Appended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoal {
    pub id: u32,
    pub description: String,
    pub status: GoalStatus,
    pub origin: GoalOrigin,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checklist {
    pub goals: Vec<SubGoal>,
    pub revision: u64,
}

/// What an [`Checklist::apply_feedback`] call actually changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeedbackEffect {
    pub newly_solved: Vec<u32>,
    pub appended: Vec<u32>,
    /// Goal ids named by the feedback that do not exist.
    pub unknown_ids: Vec<u32>,
    /// Solved goals the feedback tried to reopen.
    pub reopen_ignored: Vec<u32>,
    /// New goals dropped because the checklist was already complete.
    pub appends_ignored: Vec<String>,
}

impl FeedbackEffect {
    pub fn has_warnings(&self) -> bool {
        !self.unknown_ids.is_empty()
            || !self.reopen_ignored.is_empty()
            || !self.appends_ignored.is_empty()
    }
}

/// Strip one list marker (`-`, `*`, `N.`) from the start of a line.
pub fn strip_list_marker(line: &str) -> Option<&str> {
    let line = line.trim();
    let rest = if let Some(rest) = line.strip_prefix(['-', '*']) {
        rest
    } else {
        let digits = line.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 {
            return None;
        }
        line[digits..].strip_prefix('.')?
    };
    // "-foo" or "1.5" are not list items
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return None;
    }
    let item = rest.trim();
    (!item.is_empty()).then_some(item)
}

fn strip_status_marker(item: &str) -> &str {
    for marker in ["[done]", "[todo]", "[x]", "[ ]"] {
        if let Some(rest) = item.strip_prefix(marker) {
            return rest.trim_start();
        }
    }
    item
}

impl Checklist {
    /// Parse policy output into a checklist. Lines without a list marker are
    /// ignored.
    pub fn parse(raw: &str) -> Result<Self, ChecklistError> {
        let goals: Vec<SubGoal> = raw
            .lines()
            .filter_map(strip_list_marker)
            .map(strip_status_marker)
            .filter(|d| !d.is_empty())
            .enumerate()
            .map(|(i, d)| SubGoal {
                id: i as u32 + 1,
                description: d.to_string(),
                status: GoalStatus::Unsolved,
                origin: GoalOrigin::Initial,
            })
            .collect();
        if goals.is_empty() {
            return Err(ChecklistError::Empty);
        }
        Ok(Self { goals, revision: 0 })
    }

    /// Single-goal checklist used when the policy output has no list items.
    pub fn fallback(query: &str) -> Self {
        Self {
            goals: vec![SubGoal {
                id: 1,
                description: query.trim().to_string(),
                status: GoalStatus::Unsolved,
                origin: GoalOrigin::Initial,
            }],
            revision: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn goal(&self, id: u32) -> Option<&SubGoal> {
        self.goals.iter().find(|g| g.id == id)
    }

    pub fn solved_ids(&self) -> BTreeSet<u32> {
        self.goals
            .iter()
            .filter(|g| g.status == GoalStatus::Solved)
            .map(|g| g.id)
            .collect()
    }

    pub fn unsolved_ids(&self) -> Vec<u32> {
        self.goals
            .iter()
            .filter(|g| g.status == GoalStatus::Unsolved)
            .map(|g| g.id)
            .collect()
    }

    /// Complete when there is at least one goal and every goal is solved.
    pub fn is_complete(&self) -> bool {
        !self.goals.is_empty() && self.goals.iter().all(|g| g.status == GoalStatus::Solved)
    }

    fn next_id(&self) -> u32 {
        self.goals.iter().map(|g| g.id).max().unwrap_or(0) + 1
    }

    /// Apply one round of progress feedback. Solved goals stay solved,
    /// unknown ids are reported back rather than failing, and appended goal
    /// descriptions are deduplicated on their normalized text. A checklist
    /// that was complete before the call accepts no new goals, so completion
    /// never reverts.
    pub fn apply_feedback(&mut self, feedback: &ProgressFeedback) -> FeedbackEffect {
        let mut effect = FeedbackEffect::default();
        let was_complete = self.is_complete();
        for &id in &feedback.solved_goal_ids {
            match self.goals.iter_mut().find(|g| g.id == id) {
                Some(goal) if goal.status == GoalStatus::Unsolved => {
                    goal.status = GoalStatus::Solved;
                    effect.newly_solved.push(id);
                }
                Some(_) => {}
                None => effect.unknown_ids.push(id),
            }
        }
        for &id in &feedback.unsolved_goal_ids {
            if feedback.solved_goal_ids.contains(&id) {
                continue;
            }
            match self.goal(id) {
                Some(goal) if goal.status == GoalStatus::Solved => effect.reopen_ignored.push(id),
                Some(_) => {}
                None => effect.unknown_ids.push(id),
            }
        }
        let mut known: BTreeSet<String> =
            self.goals.iter().map(|g| normalize_key(&g.description)).collect();
        for description in &feedback.new_goals {
            let description = description.trim();
            if description.is_empty() || !known.insert(normalize_key(description)) {
                continue;
            }
            if was_complete {
                effect.appends_ignored.push(description.to_string());
                continue;
            }
            let id = self.next_id();
            self.goals.push(SubGoal {
                id,
                description: description.to_string(),
                status: GoalStatus::Unsolved,
                origin: GoalOrigin::Appended,
            });
            effect.appended.push(id);
        }
        self.revision += 1;
        effect
    }

    /// Numbered list with `[done]` / `[todo]` markers, one goal per line.
    pub fn render(&self) -> String {
        self.goals
            .iter()
            .map(|g| {
                let mark = match g.status {
                    GoalStatus::Solved => "[done]",
                    GoalStatus::Unsolved => "[todo]",
                };
                format!("{}. {} {}", g.id, mark, g.description)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}
