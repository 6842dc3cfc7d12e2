//! Paragraph-scoped LLM "views" for revising writing.
//!
//! The crate never asks a model to produce document text. It segments a
//! document into paragraphs, renders observation prompts for the paragraph
//! under the cursor and its neighbours, streams provider output, scrubs
//! chain-of-thought preambles and parses the result into display blocks.

pub mod document;
pub mod engine;
pub mod filter;
pub mod llm;
pub mod markdown;
pub mod prompts;

pub use document::{diff_paragraphs, segment, CharRange, ContentHash, CursorScope, Document, DocumentDiff, Paragraph};
pub use engine::{Neighborhood, View, ViewEngine, ViewId, ViewStatus, ViewUpdate};
pub use filter::{filter_final_output, FINAL_OUTPUT_MARKER};
pub use llm::{MockProvider, Provider, ProviderConfig, ProviderRequest, StreamEvent};
pub use markdown::{parse_display, Block, Span};
pub use prompts::{builtin_prompts, render, Category, PromptSet, PromptTemplate, RenderSettings};
