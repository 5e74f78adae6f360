use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LlmError, PromptVariant};
use crate::sim::Encoding;

const MODEL_SLOT: &str = "{{MODEL_XML}}";
const ENCODING_SLOT: &str = "{{ENCODING}}";
const EXAMPLES_SLOT: &str = "{{EXAMPLES}}";

const BUNDLED_INSTRUCTION: &str = include_str!("../../prompts/instruction.txt");
const BUNDLED_EXAMPLES: [(&str, &str, &str); 2] = [
    (
        include_str!("../../prompts/examples/example_1.xml"),
        include_str!("../../prompts/examples/example_1.encoding.txt"),
        include_str!("../../prompts/examples/example_1.sol"),
    ),
    (
        include_str!("../../prompts/examples/example_2.xml"),
        include_str!("../../prompts/examples/example_2.encoding.txt"),
        include_str!("../../prompts/examples/example_2.sol"),
    ),
];

/// A worked example: model, its encoding, and the expected contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExamplePair {
    pub model_xml: String,
    pub encoding_text: String,
    pub contract_source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PromptTemplate {
    pub variant: PromptVariant,
    pub instruction_text: String,
    pub examples: Vec<ExamplePair>,
}

impl PromptTemplate {
    /// The template compiled into the crate (files under `prompts/`).
    pub fn bundled(variant: PromptVariant) -> Self {
        let examples = BUNDLED_EXAMPLES[..variant.example_count()]
            .iter()
            .map(|(x, e, s)| ExamplePair {
                model_xml: x.to_string(),
                encoding_text: e.to_string(),
                contract_source: s.to_string(),
            })
            .collect();
        Self { variant, instruction_text: BUNDLED_INSTRUCTION.to_string(), examples }
    }

    /// Loads `instruction.txt` and `examples/example_<k>.{xml,encoding.txt,sol}`
    /// from a directory laid out like the bundled one.
    pub fn load(dir: &Path, variant: PromptVariant) -> Result<Self, LlmError> {
        let read = |rel: String| {
            let path = dir.join(&rel);
            fs::read_to_string(&path).map_err(|e| LlmError::TemplateMissing(format!("{}: {e}", path.display())))
        };
        let instruction_text = read("instruction.txt".into())?;
        let mut examples = Vec::new();
        for k in 1..=variant.example_count() {
            examples.push(ExamplePair {
                model_xml: read(format!("examples/example_{k}.xml"))?,
                encoding_text: read(format!("examples/example_{k}.encoding.txt"))?,
                contract_source: read(format!("examples/example_{k}.sol"))?,
            });
        }
        Ok(Self { variant, instruction_text, examples })
    }
}

fn render_examples(examples: &[ExamplePair]) -> String {
    let mut out = String::new();
    for (i, ex) in examples.iter().enumerate() {
        let _ = writeln!(out, "Example {}.\n\nModel:\n{}", i + 1, ex.model_xml.trim_end());
        let _ = writeln!(out, "\nEncoding:\n{}", ex.encoding_text.trim_end());
        let _ = writeln!(out, "\nContract:\n```solidity\n{}\n```\n", ex.contract_source.trim_end());
    }
    out.trim_end().to_string()
}

/// Fills the template with the target model and its encoding. Fails when a
/// placeholder is absent or the example count does not match the variant.
pub fn render_prompt(model_xml: &str, encoding: &Encoding, template: &PromptTemplate) -> Result<String, LlmError> {
    for slot in [MODEL_SLOT, ENCODING_SLOT, EXAMPLES_SLOT] {
        if !template.instruction_text.contains(slot) {
            return Err(LlmError::TemplateMissing(format!("instruction lacks {slot}")));
        }
    }
    let wanted = template.variant.example_count();
    if template.examples.len() != wanted {
        return Err(LlmError::TemplateMissing(format!(
            "{} needs {wanted} example(s), found {}",
            template.variant,
            template.examples.len()
        )));
    }
    // examples go in first so that text inside the target model is never
    // mistaken for a slot
    Ok(template
        .instruction_text
        .replace(EXAMPLES_SLOT, &render_examples(&template.examples))
        .replacen(ENCODING_SLOT, encoding.render().trim_end(), 1)
        .replacen(MODEL_SLOT, model_xml.trim_end(), 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_choreography, preprocess, write_choreography};
    use crate::machine::{emit_contract_source, generate_machine};
    use crate::net::build_net;
    use crate::sim::build_encoding;

    const EXAMPLE_SEED: u64 = 0;

    fn regenerate(xml: &str) -> (String, String, String) {
        let model = preprocess(&parse_choreography(xml).unwrap()).0;
        let enc = build_encoding(&model, EXAMPLE_SEED);
        let machine = generate_machine(&build_net(&model).unwrap(), &enc).unwrap();
        (write_choreography(&model), enc.render(), emit_contract_source(&machine).unwrap())
    }

    // Set CHORBENCH_BLESS_EXAMPLES=1 to rewrite the example files from the
    // reference generator.
    #[test]
    fn bundled_examples_match_reference_generator() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("prompts/examples");
        let bless = std::env::var_os("CHORBENCH_BLESS_EXAMPLES").is_some();
        for k in 1..=2 {
            let xml_path = dir.join(format!("example_{k}.xml"));
            let xml = fs::read_to_string(&xml_path).unwrap();
            let (canon, enc, sol) = regenerate(&xml);
            if bless {
                fs::write(&xml_path, &canon).unwrap();
                fs::write(dir.join(format!("example_{k}.encoding.txt")), &enc).unwrap();
                fs::write(dir.join(format!("example_{k}.sol")), &sol).unwrap();
                continue;
            }
            let ex = &PromptTemplate::bundled(PromptVariant::TwoShot).examples[k - 1];
            assert_eq!(ex.model_xml, canon, "example {k} model is not canonical");
            assert_eq!(ex.encoding_text, enc, "example {k} encoding drifted");
            assert_eq!(ex.contract_source, sol, "example {k} contract drifted");
        }
    }

    #[test]
    fn examples_are_outside_the_benchmark_set() {
        let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/manifest.json");
        let text = fs::read_to_string(manifest).unwrap();
        for ex in PromptTemplate::bundled(PromptVariant::TwoShot).examples {
            let model = parse_choreography(&ex.model_xml).unwrap();
            assert!(!text.contains(&format!("\"{}\"", model.model_id)));
        }
    }

    #[test]
    fn render_fills_every_slot() {
        let one = PromptTemplate::bundled(PromptVariant::OneShot);
        let two = PromptTemplate::bundled(PromptVariant::TwoShot);
        let target = &two.examples[1];
        let model = parse_choreography(&target.model_xml).unwrap();
        let enc = build_encoding(&model, 5);
        let p1 = render_prompt(&target.model_xml, &enc, &one).unwrap();
        let p2 = render_prompt(&target.model_xml, &enc, &two).unwrap();
        for p in [&p1, &p2] {
            assert!(!p.contains("{{"));
            assert!(p.contains(&enc.render().trim_end().to_string()));
            assert!(p.contains("executeTask(uint256 taskIndex)"));
        }
        assert_eq!(p1.matches("```solidity\n").count(), 1);
        assert_eq!(p2.matches("```solidity\n").count(), 2);
        assert_eq!(p1, render_prompt(&target.model_xml, &enc, &one).unwrap());
    }

    #[test]
    fn broken_templates_are_reported() {
        let mut t = PromptTemplate::bundled(PromptVariant::TwoShot);
        t.examples.pop();
        let enc = build_encoding(&parse_choreography(&t.examples[0].model_xml).unwrap(), 0);
        assert!(matches!(render_prompt("<x/>", &enc, &t), Err(LlmError::TemplateMissing(_))));
        let mut t = PromptTemplate::bundled(PromptVariant::OneShot);
        t.instruction_text = t.instruction_text.replace("{{ENCODING}}", "");
        assert!(matches!(render_prompt("<x/>", &enc, &t), Err(LlmError::TemplateMissing(_))));
        assert!(matches!(
            PromptTemplate::load(Path::new("/nonexistent"), PromptVariant::OneShot),
            Err(LlmError::TemplateMissing(_))
        ));
    }

    #[test]
    fn load_matches_bundled() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("prompts");
        for v in [PromptVariant::OneShot, PromptVariant::TwoShot] {
            assert_eq!(PromptTemplate::load(&dir, v).unwrap(), PromptTemplate::bundled(v));
        }
    }
}
