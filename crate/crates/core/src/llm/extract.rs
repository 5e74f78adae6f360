use super::LlmError;

struct Block<'a> {
    info: &'a str,
    body: String,
}

fn fenced_blocks(text: &str) -> Vec<Block<'_>> {
    let mut blocks = Vec::new();
    let mut current: Option<(&str, &str, Vec<&str>)> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        match current.as_mut() {
            None => {
                for fence in ["```", "~~~"] {
                    if let Some(info) = trimmed.strip_prefix(fence) {
                        let info = info.trim_start_matches(fence.chars().next().unwrap()).trim();
                        current = Some((fence, info, Vec::new()));
                        break;
                    }
                }
            }
            Some((fence, info, lines)) => {
                if trimmed.starts_with(*fence) && trimmed.trim_start_matches(fence.chars().next().unwrap()).trim().is_empty() {
                    blocks.push(Block { info, body: lines.join("\n") });
                    current = None;
                } else {
                    lines.push(line);
                }
            }
        }
    }
    // an unterminated block at the end still counts (truncated output)
    if let Some((_, info, lines)) = current {
        blocks.push(Block { info, body: lines.join("\n") });
    }
    blocks
}

fn is_solidity(info: &str) -> bool {
    let lang = info.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
    lang == "solidity" || lang == "sol"
}

/// Pulls contract source out of a model response. Tries, in order: the first
/// fenced block tagged as Solidity, the first fenced block of any kind, and
/// the whole response if it starts with a `pragma` line.
pub fn extract_contract(output: &str) -> Result<String, LlmError> {
    let blocks = fenced_blocks(output);
    let pick = blocks
        .iter()
        .find(|b| is_solidity(b.info))
        .or_else(|| blocks.first());
    if let Some(b) = pick {
        if !b.body.trim().is_empty() {
            return Ok(format!("{}\n", b.body.trim_end()));
        }
    }
    let trimmed = output.trim();
    if trimmed.starts_with("pragma") || trimmed.starts_with("// SPDX") && trimmed.contains("pragma") {
        return Ok(format!("{trimmed}\n"));
    }
    Err(LlmError::NoCodeFound)
}
