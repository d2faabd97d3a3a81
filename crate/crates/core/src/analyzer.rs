//! Built-in lightweight source analyzer for a statically resolvable Python
//! subset.
//!
//! Covered: top-level imports (no star imports), `class`/`def` blocks at any
//! nesting depth, module-level single-assignment variables, attribute-free
//! direct calls, name-based instantiation and variable use, direct base
//! classes, and method overrides of direct bases. Anything outside the subset
//! (dynamic attributes, star imports, rebinding) is skipped, never fatal;
//! unresolved names are reported as diagnostics. Full-strength analyzers can
//! replace this module entirely through the external facts file.

use crate::model::{Diagnostic, EdgeRelation, EntityFact, Location, NodeType, RelationFact, SourceFile};
use crate::token::scan_identifiers;
use std::collections::{BTreeMap, BTreeSet};

/// Entity and relation facts extracted from one file or a whole repository.
#[derive(Debug, Clone, Default)]
pub struct ExtractedFacts {
    pub entities: Vec<EntityFact>,
    pub relations: Vec<RelationFact>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ExtractedFacts {
    fn extend(&mut self, other: ExtractedFacts) {
        self.entities.extend(other.entities);
        self.relations.extend(other.relations);
        self.diagnostics.extend(other.diagnostics);
    }
}

/// Repository-wide analyzer: phase one parses every file and builds symbol
/// tables, `extract_facts` then resolves references per file.
pub struct Analyzer {
    modules: BTreeMap<String, ParsedModule>,
}

impl Analyzer {
    pub fn new(files: &[SourceFile]) -> Analyzer {
        let mut modules = BTreeMap::new();
        for file in files {
            modules.insert(file.path.clone(), ParsedModule::parse(file));
        }
        Analyzer { modules }
    }

    /// Facts for a single parsed file, resolved against the whole repository.
    pub fn extract_facts(&self, path: &str) -> Option<ExtractedFacts> {
        self.modules.get(path).map(|module| self.extract(module))
    }

    /// Deterministic merged fact stream over all files, ordered by path.
    pub fn extract_all(&self) -> ExtractedFacts {
        let mut out = ExtractedFacts::default();
        for module in self.modules.values() {
            out.extend(self.extract(module));
        }
        out
    }

    fn extract(&self, module: &ParsedModule) -> ExtractedFacts {
        let mut out = ExtractedFacts::default();
        out.entities.push(module.module_fact.clone());
        out.entities.extend(module.facts.iter().cloned());

        let mut reported: BTreeSet<String> = BTreeSet::new();
        fn diag(
            out: &mut ExtractedFacts,
            reported: &mut BTreeSet<String>,
            path: &str,
            line: u32,
            message: String,
        ) {
            if reported.insert(message.clone()) {
                out.diagnostics.push(Diagnostic {
                    path: path.to_string(),
                    line,
                    message,
                });
            }
        }

        // Imports
        for import in &module.imports {
            match self.resolve_import(module, import) {
                Some((path, idx)) => {
                    let target = &self.modules[&path];
                    let target_id = match idx {
                        Some(i) => target.facts[i].id(),
                        None => target.module_fact.id(),
                    };
                    out.relations.push(RelationFact {
                        relation: EdgeRelation::Imports,
                        source_id: module.module_fact.id(),
                        target_id,
                        site: import.site.clone(),
                    });
                }
                None => diag(
                    &mut out,
                    &mut reported,
                    module.path(),
                    import.site.start_line,
                    format!("unresolved import: {}", import.describe()),
                ),
            }
        }

        // Class structure: Construct, BaseClassOf, Overrides
        for (idx, entity) in module.entities.iter().enumerate() {
            if entity.kind != NodeType::Class {
                continue;
            }
            if let Some(init_idx) = module.direct_child_function(idx, "__init__") {
                out.relations.push(RelationFact {
                    relation: EdgeRelation::Construct,
                    source_id: module.facts[idx].id(),
                    target_id: module.facts[init_idx].id(),
                    site: module.header_site(init_idx),
                });
            }
            for base in &entity.bases {
                let resolved = self.resolve_name(module, &base.name);
                let Some((base_path, base_idx)) = resolved else {
                    if !PY_BUILTINS.contains(&base.name.as_str()) {
                        diag(
                            &mut out,
                            &mut reported,
                            module.path(),
                            base.site.start_line,
                            format!("unresolved base class: {}", base.name),
                        );
                    }
                    continue;
                };
                let base_module = &self.modules[&base_path];
                let Some(base_entity_idx) = base_idx else {
                    continue; // a module cannot be a base in the subset
                };
                if base_module.entities[base_entity_idx].kind != NodeType::Class {
                    continue;
                }
                out.relations.push(RelationFact {
                    relation: EdgeRelation::BaseClassOf,
                    source_id: module.facts[idx].id(),
                    target_id: base_module.facts[base_entity_idx].id(),
                    site: base.site.clone(),
                });
                // Overrides of methods defined directly on the base class
                for (m_idx, method) in module.entities.iter().enumerate() {
                    if method.parent != Some(idx) || method.kind != NodeType::Function {
                        continue;
                    }
                    if let Some(base_m_idx) =
                        base_module.direct_child_function(base_entity_idx, &method.name)
                    {
                        out.relations.push(RelationFact {
                            relation: EdgeRelation::Overrides,
                            source_id: module.facts[m_idx].id(),
                            target_id: base_module.facts[base_m_idx].id(),
                            site: module.header_site(m_idx),
                        });
                    }
                }
            }
        }

        // Name references: calls, instantiations, variable uses
        for (line_idx, line) in module.lines.iter().enumerate() {
            if line.role != LineRole::Code || !line.has_content {
                continue;
            }
            let line_no = line_idx as u32 + 1;
            let source_id = module
                .enclosing_entity(line_no)
                .map(|i| module.facts[i].id())
                .unwrap_or_else(|| module.module_fact.id());
            for (col, name) in scan_identifiers(&line.code) {
                if PY_KEYWORDS.contains(&name.as_str()) {
                    continue;
                }
                if preceded_by_dot(&line.code, col) {
                    continue;
                }
                let is_call = next_nonspace(&line.code, col + name.len() as u32) == Some('(');
                if is_assignment_lhs(&line.code, col, name.len() as u32) {
                    continue;
                }
                let Some((target_path, target_idx)) = self.resolve_name(module, &name) else {
                    if is_call && !PY_BUILTINS.contains(&name.as_str()) {
                        diag(
                            &mut out,
                            &mut reported,
                            module.path(),
                            line_no,
                            format!("unresolved name: {name}"),
                        );
                    }
                    continue;
                };
                let target_module = &self.modules[&target_path];
                let (target_id, target_kind) = match target_idx {
                    Some(i) => (target_module.facts[i].id(), target_module.entities[i].kind),
                    None => (target_module.module_fact.id(), NodeType::Module),
                };
                let relation = match (target_kind, is_call) {
                    (NodeType::Class, true) => EdgeRelation::Instantiates,
                    (NodeType::Function, true) => EdgeRelation::Calls,
                    (NodeType::Variable, _) => EdgeRelation::Uses,
                    _ => continue, // bare class/function/module references are out of subset
                };
                out.relations.push(RelationFact {
                    relation,
                    source_id: source_id.clone(),
                    target_id,
                    site: Location::line_span(
                        module.path(),
                        line_no,
                        col,
                        col + name.len() as u32,
                    ),
                });
            }
        }

        out
    }

    /// Resolve `name` in `module`'s scope: local top-level definition first,
    /// then imported alias. Returns (path, entity index), index `None` for a
    /// module target.
    fn resolve_name(&self, module: &ParsedModule, name: &str) -> Option<(String, Option<usize>)> {
        if let Some(&idx) = module.top_level.get(name) {
            return Some((module.path().to_string(), Some(idx)));
        }
        let import = &module.imports[*module.import_aliases.get(name)?];
        self.resolve_import(module, import)
    }

    /// Resolve an import statement to (target path, entity index within it).
    fn resolve_import(
        &self,
        module: &ParsedModule,
        import: &ParsedImport,
    ) -> Option<(String, Option<usize>)> {
        let base_dir = if import.dots > 0 {
            let mut dir = parent_dir(module.path());
            for _ in 1..import.dots {
                dir = parent_dir(&dir);
            }
            dir
        } else {
            String::new()
        };
        let module_rel = import.module.replace('.', "/");
        let prefix = if base_dir.is_empty() {
            module_rel.clone()
        } else if module_rel.is_empty() {
            base_dir.clone()
        } else {
            format!("{base_dir}/{module_rel}")
        };

        match &import.name {
            None => self.find_module(&prefix).map(|p| (p, None)),
            Some(name) => {
                // `from M import name`: a top-level symbol of M, or submodule M/name.py
                if let Some(path) = self.find_module(&prefix) {
                    let target = &self.modules[&path];
                    if let Some(&idx) = target.top_level.get(name) {
                        return Some((path, Some(idx)));
                    }
                }
                let sub = if prefix.is_empty() {
                    name.clone()
                } else {
                    format!("{prefix}/{name}")
                };
                self.find_module(&sub).map(|p| (p, None))
            }
        }
    }

    fn find_module(&self, prefix: &str) -> Option<String> {
        [format!("{prefix}.py"), format!("{prefix}/__init__.py")]
            .into_iter()
            .find(|candidate| self.modules.contains_key(candidate))
    }
}

/// Single-file convenience: parse and extract with only this file in scope.
pub fn extract_facts(file: &SourceFile) -> ExtractedFacts {
    let analyzer = Analyzer::new(std::slice::from_ref(file));
    analyzer.extract_facts(&file.path).expect("file was parsed")
}

/// Scan + extract over a whole file set.
pub fn analyze_repo(files: &[SourceFile]) -> ExtractedFacts {
    Analyzer::new(files).extract_all()
}

fn parent_dir(path: &str) -> String {
    match path.rsplit_once('/') {
        Some((dir, _)) => dir.to_string(),
        None => String::new(),
    }
}

// ----------------------------------------------------------------------------
// Per-file parsing
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineRole {
    Code,
    Header,
    Import,
    Decorator,
}

/// One physical line with strings and comments blanked out.
#[derive(Debug, Clone)]
pub(crate) struct LineView {
    pub(crate) raw: String,
    /// Same char positions as `raw`, string/comment chars replaced by spaces.
    pub(crate) code: String,
    pub(crate) indent: u32,
    pub(crate) has_content: bool,
    role: LineRole,
}

#[derive(Debug, Clone)]
struct BaseRef {
    name: String,
    site: Location,
}

#[derive(Debug, Clone)]
struct ParsedEntity {
    kind: NodeType,
    name: String,
    header_start: u32,
    header_end: u32,
    block_end: u32,
    indent: u32,
    parent: Option<usize>,
    bases: Vec<BaseRef>,
}

#[derive(Debug, Clone)]
struct ParsedImport {
    dots: u32,
    module: String,
    /// `None` for plain `import M`; `Some(original)` for `from M import x`.
    name: Option<String>,
    site: Location,
}

impl ParsedImport {
    fn describe(&self) -> String {
        let dots = ".".repeat(self.dots as usize);
        match &self.name {
            Some(name) => format!("from {dots}{} import {name}", self.module),
            None => format!("import {dots}{}", self.module),
        }
    }
}

struct ParsedModule {
    file: SourceFile,
    lines: Vec<LineView>,
    entities: Vec<ParsedEntity>,
    facts: Vec<EntityFact>,
    module_fact: EntityFact,
    imports: Vec<ParsedImport>,
    /// Top-level name → entity index (first definition wins).
    top_level: BTreeMap<String, usize>,
    /// Imported alias → import index (first binding wins).
    import_aliases: BTreeMap<String, usize>,
}

impl ParsedModule {
    fn path(&self) -> &str {
        &self.file.path
    }

    fn parse(file: &SourceFile) -> ParsedModule {
        let mut lines = strip_code_lines(&file.text);
        let mut entities: Vec<ParsedEntity> = Vec::new();
        let mut imports: Vec<ParsedImport> = Vec::new();
        let mut import_aliases: BTreeMap<String, usize> = BTreeMap::new();

        // (entity index, header indent)
        let mut stack: Vec<usize> = Vec::new();
        let mut last_content: u32 = 0;
        let total = lines.len();
        let mut i = 0usize;
        while i < total {
            if !lines[i].has_content {
                i += 1;
                continue;
            }
            let line_no = i as u32 + 1;
            let indent = lines[i].indent;
            while let Some(&top) = stack.last() {
                if indent <= entities[top].indent {
                    entities[top].block_end = last_content.max(entities[top].header_end);
                    stack.pop();
                } else {
                    break;
                }
            }
            let trimmed = lines[i].code.trim_start().to_string();

            if trimmed.starts_with('@') {
                lines[i].role = LineRole::Decorator;
                last_content = line_no;
                i += 1;
                continue;
            }

            if indent == 0 && (trimmed.starts_with("import ") || trimmed.starts_with("from ")) {
                let end = consume_statement(&lines, i);
                for view in lines.iter_mut().take(end + 1).skip(i) {
                    view.role = LineRole::Import;
                }
                parse_import(&lines, i, end, &file.path, &mut imports, &mut import_aliases);
                last_content = end as u32 + 1;
                i = end + 1;
                continue;
            }

            if let Some(kind) = header_kind(&trimmed) {
                let header_end = consume_header(&lines, i);
                for view in lines.iter_mut().take(header_end + 1).skip(i) {
                    view.role = LineRole::Header;
                }
                let name = header_name(&trimmed, kind).unwrap_or_default();
                let bases = if kind == NodeType::Class {
                    parse_bases(&lines, i, header_end, &file.path, &name)
                } else {
                    Vec::new()
                };
                let parent = stack.last().copied();
                entities.push(ParsedEntity {
                    kind,
                    name,
                    header_start: line_no,
                    header_end: header_end as u32 + 1,
                    block_end: header_end as u32 + 1,
                    indent,
                    parent,
                    bases,
                });
                stack.push(entities.len() - 1);
                last_content = header_end as u32 + 1;
                i = header_end + 1;
                continue;
            }

            if indent == 0 && stack.is_empty() {
                if let Some(name) = assignment_name(&trimmed) {
                    let end = consume_statement(&lines, i);
                    entities.push(ParsedEntity {
                        kind: NodeType::Variable,
                        name,
                        header_start: line_no,
                        header_end: line_no,
                        block_end: end as u32 + 1,
                        indent: 0,
                        parent: None,
                        bases: Vec::new(),
                    });
                    // The statement body still gets reference-scanned; the
                    // LHS is skipped by the assignment check.
                    last_content = end as u32 + 1;
                    i = end + 1;
                    continue;
                }
            }

            last_content = line_no;
            i += 1;
        }
        while let Some(top) = stack.pop() {
            entities[top].block_end = last_content.max(entities[top].header_end);
        }

        // Deduplicate top-level names: first definition wins
        let mut top_level: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, entity) in entities.iter().enumerate() {
            if entity.parent.is_none()
                && !entity.name.is_empty()
                && !top_level.contains_key(&entity.name)
            {
                top_level.insert(entity.name.clone(), idx);
            }
        }

        let facts: Vec<EntityFact> = entities
            .iter()
            .map(|entity| entity_fact(file, &lines, entity))
            .collect();
        let module_fact = module_fact(file);

        ParsedModule {
            file: file.clone(),
            lines,
            entities,
            facts,
            module_fact,
            imports,
            top_level,
            import_aliases,
        }
    }

    fn direct_child_function(&self, parent_idx: usize, name: &str) -> Option<usize> {
        self.entities.iter().position(|entity| {
            entity.parent == Some(parent_idx)
                && entity.kind == NodeType::Function
                && entity.name == name
        })
    }

    fn header_site(&self, idx: usize) -> Location {
        let entity = &self.entities[idx];
        let end_line = entity.header_end;
        Location::new(
            self.path(),
            entity.header_start,
            entity.indent + 1,
            end_line,
            end_col(&self.lines, end_line),
        )
    }

    /// Innermost class/function whose block contains `line`.
    fn enclosing_entity(&self, line: u32) -> Option<usize> {
        self.entities
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.kind != NodeType::Variable && e.header_start <= line && line <= e.block_end
            })
            .max_by_key(|(_, e)| e.header_start)
            .map(|(idx, _)| idx)
    }
}

fn entity_fact(file: &SourceFile, lines: &[LineView], entity: &ParsedEntity) -> EntityFact {
    let signature_text = join_raw(lines, entity.header_start, entity.header_end);
    let body_text = join_raw(lines, entity.header_start, entity.block_end);
    EntityFact {
        name: entity.name.clone(),
        kind: entity.kind,
        location: Location::new(
            &file.path,
            entity.header_start,
            entity.indent + 1,
            entity.block_end,
            end_col(lines, entity.block_end),
        ),
        signature_text,
        body_text,
    }
}

fn module_fact(file: &SourceFile) -> EntityFact {
    let name = file
        .path
        .rsplit('/')
        .next()
        .unwrap_or(&file.path)
        .trim_end_matches(".py")
        .to_string();
    let end_line = file.line_count.max(1);
    let end_col = file
        .line(end_line)
        .map(|l| l.trim_end().chars().count() as u32 + 1)
        .unwrap_or(1)
        .max(1);
    EntityFact {
        name,
        kind: NodeType::Module,
        location: Location::new(&file.path, 1, 1, end_line, end_col),
        signature_text: String::new(),
        body_text: file.text.clone(),
    }
}

fn join_raw(lines: &[LineView], start: u32, end: u32) -> String {
    lines[(start as usize - 1)..(end as usize).min(lines.len())]
        .iter()
        .map(|l| l.raw.as_str())
        .collect::<Vec<_>>()
        .join("\n")
}

fn end_col(lines: &[LineView], line: u32) -> u32 {
    lines
        .get(line as usize - 1)
        .map(|l| l.raw.trim_end().chars().count() as u32 + 1)
        .unwrap_or(1)
        .max(1)
}

fn header_kind(trimmed: &str) -> Option<NodeType> {
    if trimmed.starts_with("class ") || trimmed == "class" {
        Some(NodeType::Class)
    } else if trimmed.starts_with("def ") || trimmed.starts_with("async def ") {
        Some(NodeType::Function)
    } else {
        None
    }
}

fn header_name(trimmed: &str, kind: NodeType) -> Option<String> {
    let rest = match kind {
        NodeType::Class => trimmed.strip_prefix("class ")?,
        NodeType::Function => trimmed
            .strip_prefix("async def ")
            .or_else(|| trimmed.strip_prefix("def "))?,
        _ => return None,
    };
    let name: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() {
        None
    } else {
        Some(name)
    }
}

/// A `NAME = ...` or `NAME: T = ...` statement; returns the bound name.
fn assignment_name(trimmed: &str) -> Option<String> {
    let name: String = trimmed
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() || name.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return None;
    }
    let rest = trimmed[name.len()..].trim_start();
    if let Some(stripped) = rest.strip_prefix(':') {
        // annotated assignment: the annotation runs up to a top-level '='
        return split_top_level_eq(stripped).map(|_| name);
    }
    if rest.starts_with('=') && !rest.starts_with("==") {
        Some(name)
    } else {
        None
    }
}

/// Split `text` at the first '=' that is outside brackets and not '=='.
fn split_top_level_eq(text: &str) -> Option<(&str, &str)> {
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut i = 0usize;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            b'=' if depth == 0 => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    i += 2;
                    continue;
                }
                if i > 0 && matches!(bytes[i - 1], b'<' | b'>' | b'!' | b'=') {
                    i += 1;
                    continue;
                }
                return Some((&text[..i], &text[i + 1..]));
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Is the identifier at (col, len) the left-hand side of a simple assignment?
fn is_assignment_lhs(code: &str, col: u32, len: u32) -> bool {
    let chars: Vec<char> = code.chars().collect();
    let start = col as usize - 1;
    // must be the first non-whitespace token on the line
    if chars[..start].iter().any(|c| !c.is_whitespace()) {
        return false;
    }
    let after: String = chars[(start + len as usize).min(chars.len())..].iter().collect();
    let after = after.trim_start();
    if let Some(rest) = after.strip_prefix(':') {
        return split_top_level_eq(rest).is_some();
    }
    after.starts_with('=') && !after.starts_with("==")
}

fn preceded_by_dot(code: &str, col: u32) -> bool {
    let chars: Vec<char> = code.chars().collect();
    let mut idx = col as isize - 2;
    while idx >= 0 {
        let c = chars[idx as usize];
        if c.is_whitespace() {
            idx -= 1;
            continue;
        }
        return c == '.';
    }
    false
}

fn next_nonspace(code: &str, col_after: u32) -> Option<char> {
    code.chars()
        .skip(col_after as usize - 1)
        .find(|c| !c.is_whitespace())
}

/// Consume a statement spanning lines while brackets stay open.
/// Returns the 0-based index of the final line.
fn consume_statement(lines: &[LineView], start: usize) -> usize {
    let mut depth = 0i32;
    let mut i = start;
    loop {
        for ch in lines[i].code.chars() {
            match ch {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                _ => {}
            }
        }
        let continues = depth > 0 || lines[i].code.trim_end().ends_with('\\');
        if !continues || i + 1 >= lines.len() || i - start >= 200 {
            return i;
        }
        i += 1;
    }
}

/// Consume a class/def header: lines until brackets balance and the line ends
/// with ':' (trailing comments already blanked).
fn consume_header(lines: &[LineView], start: usize) -> usize {
    let mut depth = 0i32;
    let mut i = start;
    loop {
        for ch in lines[i].code.chars() {
            match ch {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                _ => {}
            }
        }
        let done = depth <= 0 && lines[i].code.trim_end().ends_with(':');
        if done || i + 1 >= lines.len() || i - start >= 50 {
            return i;
        }
        i += 1;
    }
}

fn parse_import(
    lines: &[LineView],
    start: usize,
    end: usize,
    path: &str,
    imports: &mut Vec<ParsedImport>,
    aliases: &mut BTreeMap<String, usize>,
) {
    let joined: String = lines[start..=end]
        .iter()
        .map(|l| l.code.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let trimmed = joined.trim();

    let mut push = |dots: u32, module: &str, name: Option<&str>, alias: &str, token: &str| {
        let site = token_site(lines, start, end, token, path);
        let idx = imports.len();
        imports.push(ParsedImport {
            dots,
            module: module.to_string(),
            name: name.map(str::to_string),
            site,
        });
        if !alias.is_empty() && !aliases.contains_key(alias) {
            aliases.insert(alias.to_string(), idx);
        }
    };

    if let Some(rest) = trimmed.strip_prefix("from ") {
        let Some((module_part, names_part)) = rest.split_once(" import ") else {
            return;
        };
        let module_part = module_part.trim();
        let dots = module_part.chars().take_while(|&c| c == '.').count() as u32;
        let module = module_part[dots as usize..].trim().to_string();
        let names_part = names_part.trim().trim_matches(|c| c == '(' || c == ')');
        if names_part.contains('*') {
            return; // star imports are out of subset; caller sees no facts
        }
        for item in names_part.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (original, alias) = match item.split_once(" as ") {
                Some((orig, al)) => (orig.trim(), al.trim()),
                None => (item, item),
            };
            if original.is_empty() {
                continue;
            }
            push(dots, &module, Some(original), alias, original);
        }
    } else if let Some(rest) = trimmed.strip_prefix("import ") {
        for item in rest.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (module, alias) = match item.split_once(" as ") {
                Some((m, al)) => (m.trim(), al.trim().to_string()),
                None => (item, item.to_string()),
            };
            let token = module.split('.').next_back().unwrap_or(module);
            push(0, module, None, &alias, token);
        }
    }
}

/// Locate `token` as a whole identifier within the statement lines.
fn token_site(lines: &[LineView], start: usize, end: usize, token: &str, path: &str) -> Location {
    for (offset, line) in lines[start..=end].iter().enumerate() {
        for (col, ident) in scan_identifiers(&line.code) {
            if ident == token {
                let line_no = (start + offset) as u32 + 1;
                return Location::line_span(path, line_no, col, col + token.chars().count() as u32);
            }
        }
    }
    let line_no = start as u32 + 1;
    Location::line_span(path, line_no, 1, end_col(lines, line_no))
}

fn parse_bases(
    lines: &[LineView],
    start: usize,
    end: usize,
    path: &str,
    class_name: &str,
) -> Vec<BaseRef> {
    let mut bases = Vec::new();
    let mut depth = 0i32;
    let mut seen_class_name = false;
    for (offset, line) in lines[start..=end].iter().enumerate() {
        let line_no = (start + offset) as u32 + 1;
        let idents = scan_identifiers(&line.code);
        for (col, ident) in idents {
            if !seen_class_name {
                if ident == class_name {
                    seen_class_name = true;
                }
                continue;
            }
            let depth_here = depth + depth_before(&line.code, col);
            if depth_here < 1 {
                continue;
            }
            if PY_KEYWORDS.contains(&ident.as_str()) {
                continue;
            }
            if preceded_by_dot(&line.code, col)
                || matches!(prev_nonspace(&line.code, col), Some('=') | Some('.'))
            {
                continue;
            }
            let after = next_nonspace(&line.code, col + ident.chars().count() as u32);
            if matches!(after, Some('=') | Some('.')) {
                continue;
            }
            bases.push(BaseRef {
                name: ident.clone(),
                site: Location::line_span(path, line_no, col, col + ident.chars().count() as u32),
            });
        }
        for ch in line.code.chars() {
            match ch {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                _ => {}
            }
        }
    }
    bases
}

fn depth_before(code: &str, col: u32) -> i32 {
    let mut depth = 0i32;
    for ch in code.chars().take(col as usize - 1) {
        match ch {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn prev_nonspace(code: &str, col: u32) -> Option<char> {
    code.chars()
        .take(col as usize - 1)
        .fold(None, |acc, c| if c.is_whitespace() { acc } else { Some(c) })
}

// ----------------------------------------------------------------------------
// String/comment stripping
// ----------------------------------------------------------------------------

/// Blank out string literals and comments, preserving char positions, and
/// classify lines. Exposed within the crate for signature rendering.
pub(crate) fn strip_code_lines(text: &str) -> Vec<LineView> {
    let mut views = Vec::new();
    // (quote char, true for triple)
    let mut open_string: Option<(char, bool)> = None;
    for raw_line in text.lines() {
        let raw: Vec<char> = raw_line.chars().collect();
        let mut code: Vec<char> = Vec::with_capacity(raw.len());
        let mut had_string = open_string.is_some();
        let mut i = 0usize;
        while i < raw.len() {
            let ch = raw[i];
            if let Some((quote, triple)) = open_string {
                had_string = true;
                if ch == '\\' {
                    code.push(' ');
                    if i + 1 < raw.len() {
                        code.push(' ');
                        i += 2;
                        continue;
                    }
                } else if ch == quote
                    && (!triple || (raw.get(i + 1) == Some(&quote) && raw.get(i + 2) == Some(&quote)))
                {
                    let closer_len = if triple { 3 } else { 1 };
                    code.extend(std::iter::repeat_n(' ', closer_len));
                    i += closer_len;
                    open_string = None;
                    continue;
                } else {
                    code.push(' ');
                }
                i += 1;
                continue;
            }
            match ch {
                '#' => {
                    while code.len() < raw.len() {
                        code.push(' ');
                    }
                    break;
                }
                '\'' | '"' => {
                    had_string = true;
                    let triple = raw.get(i + 1) == Some(&ch) && raw.get(i + 2) == Some(&ch);
                    let opener_len = if triple { 3 } else { 1 };
                    code.extend(std::iter::repeat_n(' ', opener_len));
                    i += opener_len;
                    open_string = Some((ch, triple));
                    continue;
                }
                _ => code.push(ch),
            }
            i += 1;
        }
        // single-line strings do not survive the line break
        if let Some((_, false)) = open_string {
            open_string = None;
        }
        let code: String = code.into_iter().collect();
        // lines that are pure string content carry no structural indent
        let indent = if code.trim().is_empty() {
            u32::MAX
        } else {
            code.chars()
                .take_while(|c| *c == ' ' || *c == '\t')
                .count() as u32
        };
        let has_content = !code.trim().is_empty() || (had_string && !raw_line.trim().is_empty());
        views.push(LineView {
            raw: raw_line.to_string(),
            code,
            indent,
            has_content,
            role: LineRole::Code,
        });
    }
    views
}

const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "case", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if",
    "import", "in", "is", "lambda", "match", "nonlocal", "not", "or", "pass", "raise", "return",
    "self", "try", "while", "with", "yield",
];

const PY_BUILTINS: &[&str] = &[
    "Exception", "IndexError", "KeyError", "NotImplementedError", "RuntimeError", "StopIteration",
    "TypeError", "ValueError", "abs", "bool", "bytes", "classmethod", "dict", "dir", "enumerate",
    "filter", "float", "format", "frozenset", "getattr", "hasattr", "hash", "id", "int",
    "isinstance", "issubclass", "iter", "len", "list", "map", "max", "min", "next", "object",
    "open", "print", "property", "range", "repr", "reversed", "set", "setattr", "sorted",
    "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn file(path: &str, text: &str) -> SourceFile {
        SourceFile::new(path, text)
    }

    const MODULE_A: &str = "\
variable_V = \"shared-state\"


class ClassX:
    def describe(self):
        return \"ClassX\"


def function_F():
    worker = ClassX()
    return variable_V
";

    const MODULE_B: &str = "\
from module_a import ClassX


def build_worker():
    return ClassX()
";

    fn two_file_repo() -> Vec<SourceFile> {
        vec![file("module_a.py", MODULE_A), file("module_b.py", MODULE_B)]
    }

    fn relation_summary(facts: &ExtractedFacts) -> Vec<(EdgeRelation, String, String)> {
        facts
            .relations
            .iter()
            .map(|r| {
                let name = |id: &str| id.split(':').next().unwrap_or("").to_string();
                (r.relation, name(&r.source_id), name(&r.target_id))
            })
            .collect()
    }

    #[test]
    fn two_file_repo_produces_expected_relations() {
        let facts = analyze_repo(&two_file_repo());
        let mut summary = relation_summary(&facts);
        summary.sort();
        assert_eq!(
            summary,
            vec![
                (EdgeRelation::Imports, "module_b".into(), "ClassX".into()),
                (EdgeRelation::Instantiates, "build_worker".into(), "ClassX".into()),
                (EdgeRelation::Instantiates, "function_F".into(), "ClassX".into()),
                (EdgeRelation::Uses, "function_F".into(), "variable_V".into()),
            ]
        );
        assert!(facts.diagnostics.is_empty(), "{:?}", facts.diagnostics);
    }

    #[test]
    fn single_function_file_has_module_and_function_facts_only() {
        let f = file("solo.py", "def greet():\n    return 1\n");
        let facts = extract_facts(&f);
        assert_eq!(facts.entities.len(), 2);
        assert_eq!(facts.entities[0].kind, NodeType::Module);
        assert_eq!(facts.entities[1].kind, NodeType::Function);
        assert_eq!(facts.entities[1].name, "greet");
        assert!(facts.relations.is_empty());
    }

    #[test]
    fn base_class_across_files_yields_base_class_of() {
        let files = vec![
            file("base.py", "class A:\n    def run(self):\n        return 0\n"),
            file(
                "derived.py",
                "from base import A\n\n\nclass B(A):\n    def run(self):\n        return 1\n",
            ),
        ];
        let facts = analyze_repo(&files);
        let summary = relation_summary(&facts);
        assert!(summary.contains(&(EdgeRelation::BaseClassOf, "B".into(), "A".into())));
        assert!(summary.contains(&(EdgeRelation::Overrides, "run".into(), "run".into())));
        let base_edge = facts
            .relations
            .iter()
            .find(|r| r.relation == EdgeRelation::BaseClassOf)
            .unwrap();
        assert_eq!(base_edge.site.path, "derived.py");
        assert_eq!(base_edge.site.start_line, 4);
    }

    #[test]
    fn multiple_bases_each_yield_an_edge() {
        let files = vec![
            file("alpha.py", "class Alpha:\n    def ping(self):\n        return 0\n"),
            file("beta.py", "class Beta:\n    def pong(self):\n        return 0\n"),
            file(
                "gamma.py",
                "from alpha import Alpha\nfrom beta import Beta\n\n\nclass Gamma(Alpha, Beta):\n    def pong(self):\n        return 1\n",
            ),
        ];
        let facts = analyze_repo(&files);
        let summary = relation_summary(&facts);
        assert!(summary.contains(&(EdgeRelation::BaseClassOf, "Gamma".into(), "Alpha".into())));
        assert!(summary.contains(&(EdgeRelation::BaseClassOf, "Gamma".into(), "Beta".into())));
        // pong overrides only Beta's method
        let overrides: Vec<_> = facts
            .relations
            .iter()
            .filter(|r| r.relation == EdgeRelation::Overrides)
            .collect();
        assert_eq!(overrides.len(), 1);
        assert!(overrides[0].target_id.contains("beta.py"));
    }

    #[test]
    fn construct_links_class_to_its_init() {
        let f = file(
            "c.py",
            "class C:\n    def __init__(self):\n        self.x = 1\n",
        );
        let facts = extract_facts(&f);
        let summary = relation_summary(&facts);
        assert_eq!(
            summary,
            vec![(EdgeRelation::Construct, "C".into(), "__init__".into())]
        );
    }

    #[test]
    fn signature_is_line_prefix_of_body() {
        let f = file(
            "sig.py",
            "def long_call(\n    a,\n    b,\n):\n    return a + b\n",
        );
        let facts = extract_facts(&f);
        let func = facts
            .entities
            .iter()
            .find(|e| e.kind == NodeType::Function)
            .unwrap();
        assert!(func.body_text.starts_with(&func.signature_text));
        assert_eq!(func.signature_text.lines().count(), 4);
        assert_eq!(func.location.start_line, 1);
        assert_eq!(func.location.end_line, 5);
    }

    #[test]
    fn strings_and_comments_do_not_produce_relations() {
        let files = vec![
            file("a.py", "CONST = 1\n"),
            file(
                "b.py",
                "from a import CONST\n\n\ndef f():\n    # CONST in comment\n    s = \"CONST\"\n    doc = '''\n    CONST\n    '''\n    return s\n",
            ),
        ];
        let facts = analyze_repo(&files);
        let uses: Vec<_> = facts
            .relations
            .iter()
            .filter(|r| r.relation == EdgeRelation::Uses)
            .collect();
        assert!(uses.is_empty(), "{uses:?}");
    }

    #[test]
    fn unresolved_call_reports_diagnostic_once() {
        let f = file("d.py", "def f():\n    phantom()\n    phantom()\n");
        let facts = extract_facts(&f);
        assert_eq!(facts.diagnostics.len(), 1);
        assert!(facts.diagnostics[0].message.contains("phantom"));
    }

    #[test]
    fn builtin_calls_are_silent() {
        let f = file("e.py", "def f(xs):\n    print(len(xs))\n    return sorted(xs)\n");
        let facts = extract_facts(&f);
        assert!(facts.diagnostics.is_empty());
        assert!(facts.relations.is_empty());
    }

    #[test]
    fn nested_defs_have_parent_chain_spans() {
        let f = file(
            "n.py",
            "def outer():\n    def inner():\n        return 1\n    return inner\n",
        );
        let facts = extract_facts(&f);
        let outer = facts.entities.iter().find(|e| e.name == "outer").unwrap();
        let inner = facts.entities.iter().find(|e| e.name == "inner").unwrap();
        assert_eq!(outer.location.start_line, 1);
        assert_eq!(outer.location.end_line, 4);
        assert_eq!(inner.location.start_line, 2);
        assert_eq!(inner.location.end_line, 3);
    }

    #[test]
    fn import_as_binds_alias() {
        let files = vec![
            file("lib.py", "def helper():\n    return 1\n"),
            file("use.py", "from lib import helper as h\n\n\ndef g():\n    return h()\n"),
        ];
        let facts = analyze_repo(&files);
        let summary = relation_summary(&facts);
        assert!(summary.contains(&(EdgeRelation::Imports, "use".into(), "helper".into())));
        assert!(summary.contains(&(EdgeRelation::Calls, "g".into(), "helper".into())));
    }

    #[test]
    fn two_names_in_one_import_yield_two_edges() {
        let files = vec![
            file("lib.py", "def one():\n    return 1\n\n\ndef two():\n    return 2\n"),
            file("use.py", "from lib import one, two\n"),
        ];
        let facts = analyze_repo(&files);
        let imports: Vec<_> = facts
            .relations
            .iter()
            .filter(|r| r.relation == EdgeRelation::Imports)
            .collect();
        assert_eq!(imports.len(), 2);
        assert_ne!(imports[0].site, imports[1].site);
    }

    #[test]
    fn relative_import_resolves_within_package() {
        let files = vec![
            file("pkg/util.py", "def tool():\n    return 1\n"),
            file("pkg/app.py", "from .util import tool\n\n\ndef go():\n    return tool()\n"),
        ];
        let facts = analyze_repo(&files);
        let summary = relation_summary(&facts);
        assert!(summary.contains(&(EdgeRelation::Imports, "app".into(), "tool".into())));
        assert!(summary.contains(&(EdgeRelation::Calls, "go".into(), "tool".into())));
    }

    #[test]
    fn extraction_is_deterministic() {
        let files = two_file_repo();
        let a = analyze_repo(&files);
        let b = analyze_repo(&files);
        assert_eq!(a.entities, b.entities);
        assert_eq!(a.relations, b.relations);
    }

    #[test]
    fn column_zero_docstring_does_not_close_the_block() {
        let f = file(
            "doc.py",
            "def f():\n    note = \"\"\"\nfree text at column zero\n\"\"\"\n    return note\n\n\ndef g():\n    return 2\n",
        );
        let facts = extract_facts(&f);
        let func_f = facts.entities.iter().find(|e| e.name == "f").unwrap();
        assert_eq!(func_f.location.end_line, 5, "body extends past the docstring");
        let func_g = facts.entities.iter().find(|e| e.name == "g").unwrap();
        assert_eq!(func_g.location.start_line, 8);
    }

    #[test]
    fn module_fact_spans_whole_file() {
        let f = file("m.py", "x = 1\ny = 2\n");
        let facts = extract_facts(&f);
        let module = &facts.entities[0];
        assert_eq!(module.kind, NodeType::Module);
        assert_eq!(module.location.start_line, 1);
        assert_eq!(module.location.end_line, 2);
    }
}
