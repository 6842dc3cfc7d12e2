//! Predefined and user-edited prompts that ask the model to observe a
//! paragraph instead of writing it.

use serde::{Deserialize, Serialize};

use crate::llm::{estimate_and_truncate, FilterMode, ProviderRequest};

pub const THESIS_ID: &str = "thesis";
pub const CONCEPTS_ID: &str = "important-concepts";
pub const WRITER_QUESTIONS_ID: &str = "writer-questions";
pub const READER_QUESTIONS_ID: &str = "reader-questions";
pub const ADVICE_ID: &str = "advice";

pub const THESIS_BODY: &str = "Step 1: Write a sentence stating what seems to be the thesis of the paragraph. Step 2: Say FINAL OUTPUT. Step 3: Say the thesis again, but even more concisely with no filler words like `the thesis is.'";
pub const CONCEPTS_BODY: &str = "Step 1: List 10 important concepts in this paragraph, in the format 1. Concept: [concept as a complete sentence] Relevance: [relevance score, 10 best]. Step 2: Output FINAL OUTPUT, then a new line, then a Markdown unordered list with the 3 concepts with highest relevance, in short phrases of 2 or 3 words.";
pub const WRITER_QUESTIONS_BODY: &str =
    "List 2 or 3 questions that the writer was attempting to answer in this paragraph.";
pub const READER_QUESTIONS_BODY: &str = "As a reader, ask the writer 2 or 3 questions about definitions, logical connections, or some needed background information.";
pub const ADVICE_BODY: &str =
    "What advice would you give the writer to improve this paragraph? Respond in a bulleted list.";

/// Sent ahead of every prompt body.
pub const FRAMING: &str =
    "You are giving observations about the writer's paragraph; do not rewrite it.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Summary,
    Inquisitive,
    Advisory,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt `{0}`")]
    NotFound(String),
    #[error("prompt body must not be empty")]
    EmptyBody,
    #[error("prompt label must not be empty")]
    EmptyLabel,
    #[error("prompt id `{0}` is already taken")]
    DuplicateId(String),
    #[error("paragraph text must not be empty")]
    EmptyParagraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub label: String,
    pub category: Category,
    pub body: String,
    pub is_builtin: bool,
    pub uses_final_output_filter: bool,
    /// Builtin id this template was forked from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forked_from: Option<String>,
}

impl PromptTemplate {
    fn builtin(id: &str, label: &str, category: Category, body: &str, filter: bool) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            category,
            body: body.into(),
            is_builtin: true,
            uses_final_output_filter: filter,
            forked_from: None,
        }
    }

    pub fn filter_mode(&self) -> FilterMode {
        if self.uses_final_output_filter {
            FilterMode::FinalOutput
        } else {
            FilterMode::None
        }
    }
}

/// Limits applied when turning a template into a provider request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub context_budget_chars: usize,
    pub max_output_tokens: u32,
    pub temperature: f32,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            context_budget_chars: crate::llm::ProviderConfig::default().context_budget_chars,
            max_output_tokens: 512,
            temperature: 0.7,
        }
    }
}

/// Builds the provider request for one paragraph.
///
/// The instruction is the framing sentence followed by the template body.
/// The context is the paragraph, prefixed with `Title: ...` when a title is
/// given and it leaves room in the budget. Over-budget paragraphs are cut and
/// the request is flagged `truncated`.
pub fn render(
    template: &PromptTemplate,
    paragraph_text: &str,
    title: Option<&str>,
    settings: &RenderSettings,
) -> Result<ProviderRequest, PromptError> {
    if paragraph_text.trim().is_empty() {
        return Err(PromptError::EmptyParagraph);
    }
    let budget = settings.context_budget_chars;
    let prefix = title
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| format!("Title: {t}\n\n"))
        .filter(|p| p.chars().count() < budget)
        .unwrap_or_default();
    let (paragraph, truncated) =
        estimate_and_truncate(paragraph_text, budget - prefix.chars().count());

    Ok(ProviderRequest {
        instruction: format!("{FRAMING}\n\n{}", template.body),
        context: format!("{prefix}{paragraph}"),
        truncated,
        max_output_tokens: settings.max_output_tokens,
        temperature: settings.temperature,
        filter: template.filter_mode(),
    })
}

/// Fields accepted when creating a custom prompt.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDraft {
    pub label: String,
    pub body: String,
    #[serde(default)]
    pub category: Option<Category>,
    #[serde(default)]
    pub uses_final_output_filter: bool,
}

/// Options for [`PromptSet::edit_with`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptEdit {
    pub body: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Keep the builtin's category on a fork instead of `custom`.
    #[serde(default)]
    pub keep_category: bool,
}

/// Entry in the prompt export file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedPrompt {
    pub id: String,
    pub label: String,
    pub category: Category,
    pub body: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub uses_final_output_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    templates: Vec<PromptTemplate>,
    next_custom: u64,
}

impl Default for PromptSet {
    fn default() -> Self {
        builtin_prompts()
    }
}

/// The five predefined prompts, summary first, then inquisitive, then advisory.
pub fn builtin_prompts() -> PromptSet {
    use Category::*;
    PromptSet {
        templates: vec![
            PromptTemplate::builtin(THESIS_ID, "Thesis Statement", Summary, THESIS_BODY, true),
            PromptTemplate::builtin(CONCEPTS_ID, "Important Concepts", Summary, CONCEPTS_BODY, true),
            PromptTemplate::builtin(
                WRITER_QUESTIONS_ID,
                "Questions the Writer Was Attempting to Answer",
                Inquisitive,
                WRITER_QUESTIONS_BODY,
                false,
            ),
            PromptTemplate::builtin(
                READER_QUESTIONS_ID,
                "Questions a Reader Might Have",
                Inquisitive,
                READER_QUESTIONS_BODY,
                false,
            ),
            PromptTemplate::builtin(ADVICE_ID, "Advice", Advisory, ADVICE_BODY, false),
        ],
        next_custom: 1,
    }
}

impl PromptSet {
    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn require(&self, id: &str) -> Result<&PromptTemplate, PromptError> {
        self.get(id).ok_or_else(|| PromptError::NotFound(id.to_string()))
    }

    /// Builtins first (in category order), then customs by creation time.
    pub fn list(&self) -> &[PromptTemplate] {
        &self.templates
    }

    pub fn builtins(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.iter().filter(|t| t.is_builtin)
    }

    pub fn customs(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.iter().filter(|t| !t.is_builtin)
    }

    fn fresh_id(&mut self) -> String {
        loop {
            let id = format!("custom-{}", self.next_custom);
            self.next_custom += 1;
            if self.get(&id).is_none() {
                return id;
            }
        }
    }

    pub fn create(&mut self, draft: PromptDraft) -> Result<&PromptTemplate, PromptError> {
        if draft.body.trim().is_empty() {
            return Err(PromptError::EmptyBody);
        }
        if draft.label.trim().is_empty() {
            return Err(PromptError::EmptyLabel);
        }
        let id = self.fresh_id();
        self.templates.push(PromptTemplate {
            id,
            label: draft.label.trim().to_string(),
            category: draft.category.unwrap_or(Category::Custom),
            body: draft.body,
            is_builtin: false,
            uses_final_output_filter: draft.uses_final_output_filter,
            forked_from: None,
        });
        Ok(self.templates.last().unwrap())
    }

    pub fn edit(&mut self, id: &str, body: impl Into<String>) -> Result<&PromptTemplate, PromptError> {
        self.edit_with(
            id,
            PromptEdit {
                body: body.into(),
                ..PromptEdit::default()
            },
        )
    }

    /// Edits a prompt and returns the variant that should become active.
    ///
    /// Builtins are never modified: editing one forks a custom copy labelled
    /// `<label> (edited)` that keeps the builtin's output filter. Customs are
    /// edited in place and keep their id.
    pub fn edit_with(&mut self, id: &str, edit: PromptEdit) -> Result<&PromptTemplate, PromptError> {
        let pos = self
            .templates
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| PromptError::NotFound(id.to_string()))?;
        if edit.body.trim().is_empty() {
            return Err(PromptError::EmptyBody);
        }
        if matches!(&edit.label, Some(l) if l.trim().is_empty()) {
            return Err(PromptError::EmptyLabel);
        }

        if !self.templates[pos].is_builtin {
            let t = &mut self.templates[pos];
            t.body = edit.body;
            if let Some(label) = edit.label {
                t.label = label.trim().to_string();
            }
            return Ok(&self.templates[pos]);
        }

        let source = self.templates[pos].clone();
        let id = self.fresh_id();
        self.templates.push(PromptTemplate {
            id,
            label: edit
                .label
                .map(|l| l.trim().to_string())
                .unwrap_or_else(|| format!("{} (edited)", source.label)),
            category: if edit.keep_category {
                source.category
            } else {
                Category::Custom
            },
            body: edit.body,
            is_builtin: false,
            uses_final_output_filter: source.uses_final_output_filter,
            forked_from: Some(source.id),
        });
        Ok(self.templates.last().unwrap())
    }

    /// Custom prompts only; builtins are re-created on import.
    pub fn export(&self) -> Vec<ExportedPrompt> {
        self.customs()
            .map(|t| ExportedPrompt {
                id: t.id.clone(),
                label: t.label.clone(),
                category: t.category,
                body: t.body.clone(),
                uses_final_output_filter: t.uses_final_output_filter,
            })
            .collect()
    }

    /// Builtins plus the given customs, validated.
    pub fn import(entries: Vec<ExportedPrompt>) -> Result<PromptSet, PromptError> {
        let mut set = builtin_prompts();
        for entry in entries {
            if entry.body.trim().is_empty() {
                return Err(PromptError::EmptyBody);
            }
            if entry.label.trim().is_empty() {
                return Err(PromptError::EmptyLabel);
            }
            if entry.id.trim().is_empty() || set.get(&entry.id).is_some() {
                return Err(PromptError::DuplicateId(entry.id));
            }
            if let Some(n) = entry.id.strip_prefix("custom-").and_then(|n| n.parse::<u64>().ok()) {
                set.next_custom = set.next_custom.max(n + 1);
            }
            set.templates.push(PromptTemplate {
                id: entry.id,
                label: entry.label,
                category: entry.category,
                body: entry.body,
                is_builtin: false,
                uses_final_output_filter: entry.uses_final_output_filter,
                forked_from: None,
            });
        }
        Ok(set)
    }
}
