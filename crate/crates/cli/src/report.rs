use futures::stream::{self, StreamExt};
use marginalia_core::engine::{View, ViewEngine, ViewStatus};
use marginalia_core::markdown::{to_markdown, Block};
use marginalia_core::prompts::{PromptSet, PromptTemplate};
use marginalia_core::{CharRange, Document, Paragraph};
use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

/// Published JSON schema for [`Report`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub report_version: u32,
    pub prompts: Vec<PromptRef>,
    pub paragraphs: Vec<ParagraphReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRef {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphReport {
    pub index: usize,
    pub range: CharRange,
    pub text: String,
    /// One entry per prompt, in `Report::prompts` order.
    pub views: Vec<ViewReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewReport {
    pub prompt_id: String,
    pub status: ViewStatus,
    /// The paragraph was cut to fit the context budget.
    pub truncated: bool,
    pub display_text: String,
    pub display_blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ViewReport {
    fn from_view(view: &View) -> Self {
        Self {
            prompt_id: view.prompt_id.clone(),
            status: view.status,
            truncated: view.truncated,
            display_text: view.display_text.clone(),
            display_blocks: view.display_blocks(),
            error: view.error_detail.clone(),
        }
    }

    fn failed(prompt_id: &str, error: String) -> Self {
        Self {
            prompt_id: prompt_id.to_string(),
            status: ViewStatus::Error,
            truncated: false,
            display_text: String::new(),
            display_blocks: Vec::new(),
            error: Some(error),
        }
    }
}

impl Report {
    pub fn has_errors(&self) -> bool {
        self.paragraphs
            .iter()
            .flat_map(|p| &p.views)
            .any(|v| v.status != ViewStatus::Complete)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Revision report\n");
        for p in &self.paragraphs {
            out.push_str(&format!(
                "\n## Paragraph {} (characters {}..{})\n\n",
                p.index + 1,
                p.range.start,
                p.range.end
            ));
            out.push_str(&format!("> {}\n", p.text.trim()));
            for (view, prompt) in p.views.iter().zip(&self.prompts) {
                out.push_str(&format!("\n### {}\n\n", prompt.label));
                match view.status {
                    ViewStatus::Complete if view.display_blocks.is_empty() => out.push_str("_(empty)_\n"),
                    ViewStatus::Complete => {
                        out.push_str(&to_markdown(&view.display_blocks));
                        if !out.ends_with('\n') {
                            out.push('\n');
                        }
                    }
                    _ => out.push_str(&format!(
                        "**Error:** {}\n",
                        view.error.as_deref().unwrap_or("generation did not finish")
                    )),
                }
                if view.truncated {
                    out.push_str("\n_Paragraph truncated to fit the context budget._\n");
                }
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown prompt id `{id}`; available: {available}")]
pub struct UnknownPrompt {
    pub id: String,
    pub available: String,
}

/// Resolves ids against the prompt set, failing on the first unknown one.
pub fn resolve_prompts(set: &PromptSet, ids: &[String]) -> Result<Vec<PromptTemplate>, UnknownPrompt> {
    ids.iter()
        .map(|id| {
            set.get(id).cloned().ok_or_else(|| UnknownPrompt {
                id: id.clone(),
                available: set.list().iter().map(|t| t.id.as_str()).collect::<Vec<_>>().join(", "),
            })
        })
        .collect()
}

async fn paragraph_report(engine: &ViewEngine, paragraph: &Paragraph, templates: &[PromptTemplate]) -> ParagraphReport {
    let mut views = Vec::with_capacity(templates.len());
    for template in templates {
        let view = match engine.generate(paragraph, template) {
            Ok((view, _)) => {
                let done = engine.wait(&view.id).await.unwrap_or(view);
                ViewReport::from_view(&done)
            }
            Err(e) => ViewReport::failed(&template.id, e.to_string()),
        };
        views.push(view);
    }
    ParagraphReport {
        index: paragraph.index,
        range: paragraph.range,
        text: paragraph.text.clone(),
        views,
    }
}

/// Runs every prompt over every paragraph. Up to `parallelism` paragraphs
/// are in flight at once; output order is always document order.
pub async fn build_report(
    engine: &ViewEngine,
    doc: &Document,
    templates: &[PromptTemplate],
    parallelism: usize,
) -> Report {
    let paragraphs = stream::iter(doc.paragraphs())
        .map(|p| paragraph_report(engine, p, templates))
        .buffered(parallelism.max(1))
        .collect()
        .await;
    Report {
        report_version: REPORT_VERSION,
        prompts: templates
            .iter()
            .map(|t| PromptRef {
                id: t.id.clone(),
                label: t.label.clone(),
            })
            .collect(),
        paragraphs,
    }
}
