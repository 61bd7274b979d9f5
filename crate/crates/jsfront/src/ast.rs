//! Arena syntax tree with ESTree-style node kinds.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::token::Span;

macro_rules! node_kinds {
    ($($name:ident),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum NodeKind {
            $($name,)*
        }

        impl NodeKind {
            pub const ALL: &'static [NodeKind] = &[$(NodeKind::$name,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$name => stringify!($name),)*
                }
            }

            pub fn from_name(name: &str) -> Option<NodeKind> {
                match name {
                    $(stringify!($name) => Some(NodeKind::$name),)*
                    _ => None,
                }
            }
        }
    };
}

node_kinds! {
    Program,
    // statements
    ExpressionStatement,
    BlockStatement,
    EmptyStatement,
    DebuggerStatement,
    ReturnStatement,
    LabeledStatement,
    BreakStatement,
    ContinueStatement,
    IfStatement,
    SwitchStatement,
    SwitchCase,
    ThrowStatement,
    TryStatement,
    CatchClause,
    WhileStatement,
    DoWhileStatement,
    ForStatement,
    ForInStatement,
    ForOfStatement,
    // declarations
    FunctionDeclaration,
    VariableDeclaration,
    VariableDeclarator,
    ClassDeclaration,
    ClassBody,
    MethodDefinition,
    ImportDeclaration,
    ImportSpecifier,
    ImportDefaultSpecifier,
    ImportNamespaceSpecifier,
    ExportNamedDeclaration,
    ExportSpecifier,
    ExportDefaultDeclaration,
    ExportAllDeclaration,
    // expressions
    Identifier,
    ThisExpression,
    Super,
    ArrayExpression,
    ObjectExpression,
    Property,
    FunctionExpression,
    ArrowFunctionExpression,
    ClassExpression,
    UnaryExpression,
    UpdateExpression,
    BinaryExpression,
    LogicalExpression,
    AssignmentExpression,
    ConditionalExpression,
    CallExpression,
    NewExpression,
    MemberExpression,
    ChainExpression,
    SequenceExpression,
    YieldExpression,
    AwaitExpression,
    TemplateLiteral,
    TemplateElement,
    TaggedTemplateExpression,
    SpreadElement,
    MetaProperty,
    ImportExpression,
    // patterns
    ObjectPattern,
    ArrayPattern,
    RestElement,
    AssignmentPattern,
    // literals
    NumericLiteral,
    StringLiteral,
    BooleanLiteral,
    NullLiteral,
    RegExpLiteral,
    BigIntLiteral,
}

impl NodeKind {
    pub fn is_literal(self) -> bool {
        matches!(
            self,
            NodeKind::NumericLiteral
                | NodeKind::StringLiteral
                | NodeKind::BooleanLiteral
                | NodeKind::NullLiteral
                | NodeKind::RegExpLiteral
                | NodeKind::BigIntLiteral
        )
    }

    pub fn is_function(self) -> bool {
        matches!(
            self,
            NodeKind::FunctionDeclaration
                | NodeKind::FunctionExpression
                | NodeKind::ArrowFunctionExpression
        )
    }

    /// Node kind under plain ESTree, where every literal is `Literal`.
    pub fn estree_name(self) -> &'static str {
        if self.is_literal() {
            "Literal"
        } else {
            self.as_str()
        }
    }
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type NodeId = u32;

/// Per-node boolean attributes.
pub mod flags {
    pub const COMPUTED: u16 = 1 << 0;
    pub const SHORTHAND: u16 = 1 << 1;
    pub const OPTIONAL: u16 = 1 << 2;
    pub const PREFIX: u16 = 1 << 3;
    pub const STATIC: u16 = 1 << 4;
    pub const ASYNC: u16 = 1 << 5;
    pub const GENERATOR: u16 = 1 << 6;
    pub const EXPRESSION_BODY: u16 = 1 << 7;
    pub const METHOD: u16 = 1 << 8;
    pub const DELEGATE: u16 = 1 << 9;
    pub const AWAIT: u16 = 1 << 10;
}

/// A parsed program: kind-labeled ordered tree stored in preorder.
///
/// Node 0 is the root. Identifier names, literal source text, operators
/// and declaration kinds live in a side table (`attr`), never in the
/// node kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntaxTree {
    kinds: Vec<NodeKind>,
    spans: Vec<Span>,
    flags: Vec<u16>,
    parents: Vec<NodeId>,
    child_start: Vec<u32>,
    children: Vec<NodeId>,
    attrs: Vec<Option<Box<str>>>,
}

impl SyntaxTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id as usize]
    }

    pub fn span(&self, id: NodeId) -> Span {
        self.spans[id as usize]
    }

    pub fn has_flag(&self, id: NodeId, flag: u16) -> bool {
        self.flags[id as usize] & flag != 0
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        if id == 0 {
            None
        } else {
            Some(self.parents[id as usize])
        }
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        let i = id as usize;
        &self.children[self.child_start[i] as usize..self.child_start[i + 1] as usize]
    }

    /// Identifier name, literal raw text, operator or declaration kind.
    pub fn attr(&self, id: NodeId) -> Option<&str> {
        self.attrs[id as usize].as_deref()
    }

    /// Node ids in preorder; because nodes are stored in preorder this
    /// is simply `0..len`.
    pub fn preorder(&self) -> impl Iterator<Item = NodeId> {
        0..self.kinds.len() as NodeId
    }

    pub fn kinds_preorder(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Index one past the last descendant of `id`.
    pub fn subtree_end(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        while let Some(&last) = self.children(cur).last() {
            cur = last;
        }
        cur + 1
    }

    /// Parenthesized preorder of node kinds for the subtree at `id`,
    /// e.g. `(BinaryExpression(Identifier)(NumericLiteral))`.
    pub fn subtree_sexp(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_sexp(id, &mut out);
        out
    }

    fn write_sexp(&self, id: NodeId, out: &mut String) {
        out.push('(');
        out.push_str(self.kind(id).as_str());
        for &c in self.children(id) {
            self.write_sexp(c, out);
        }
        out.push(')');
    }

    /// JSON export in the `{kind, children, text?}` shape.
    pub fn to_json(&self) -> Value {
        self.node_json(self.root())
    }

    fn node_json(&self, id: NodeId) -> Value {
        let children: Vec<Value> = self.children(id).iter().map(|&c| self.node_json(c)).collect();
        let mut obj = json!({ "kind": self.kind(id).as_str(), "children": children });
        if let Some(text) = self.attr(id) {
            obj["text"] = Value::String(text.to_string());
        }
        obj
    }

    /// Rebuilds a tree from the JSON export. Spans are not part of the
    /// export and come back empty.
    pub fn from_json(value: &Value) -> Result<SyntaxTree, String> {
        let mut builder = TreeBuilder::default();
        let root = builder.node_from_json(value, "$")?;
        Ok(builder.finish(root))
    }
}

#[derive(Clone, Debug)]
struct RawNode {
    kind: NodeKind,
    span: Span,
    flags: u16,
    children: Vec<NodeId>,
    attr: Option<Box<str>>,
}

/// Bottom-up arena used while parsing. Children are created before
/// their parent; `finish` renumbers into preorder.
#[derive(Clone, Debug, Default)]
pub(crate) struct TreeBuilder {
    nodes: Vec<RawNode>,
}

impl TreeBuilder {
    pub fn push(&mut self, kind: NodeKind, span: Span, children: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(RawNode {
            kind,
            span,
            flags: 0,
            children,
            attr: None,
        });
        id
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id as usize].kind
    }

    pub fn set_kind(&mut self, id: NodeId, kind: NodeKind) {
        self.nodes[id as usize].kind = kind;
    }

    pub fn span(&self, id: NodeId) -> Span {
        self.nodes[id as usize].span
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id as usize].children
    }

    pub fn set_flag(&mut self, id: NodeId, flag: u16) {
        self.nodes[id as usize].flags |= flag;
    }

    pub fn clear_flag(&mut self, id: NodeId, flag: u16) {
        self.nodes[id as usize].flags &= !flag;
    }

    pub fn has_flag(&self, id: NodeId, flag: u16) -> bool {
        self.nodes[id as usize].flags & flag != 0
    }

    pub fn set_attr(&mut self, id: NodeId, attr: &str) {
        self.nodes[id as usize].attr = Some(attr.into());
    }

    pub fn clear_attr(&mut self, id: NodeId) {
        self.nodes[id as usize].attr = None;
    }

    pub fn attr(&self, id: NodeId) -> Option<&str> {
        self.nodes[id as usize].attr.as_deref()
    }

    /// Deep copy of a subtree (used where ESTree shares one node in two
    /// fields, e.g. shorthand properties).
    pub fn copy(&mut self, id: NodeId) -> NodeId {
        let raw = self.nodes[id as usize].clone();
        let children = raw.children.iter().map(|&c| self.copy(c)).collect();
        let new = self.nodes.len() as NodeId;
        self.nodes.push(RawNode { children, ..raw });
        new
    }

    pub fn finish(self, root: NodeId) -> SyntaxTree {
        let n = self.nodes.len();
        let mut tree = SyntaxTree {
            kinds: Vec::with_capacity(n),
            spans: Vec::with_capacity(n),
            flags: Vec::with_capacity(n),
            parents: Vec::with_capacity(n),
            child_start: Vec::with_capacity(n + 1),
            children: Vec::with_capacity(n),
            attrs: Vec::with_capacity(n),
        };
        let mut nodes: Vec<Option<RawNode>> = self.nodes.into_iter().map(Some).collect();
        // Assign preorder ids.
        let mut order = Vec::with_capacity(n);
        let mut new_id = vec![u32::MAX; n];
        let mut parent_of = Vec::with_capacity(n);
        let mut stack = vec![(root, 0u32)];
        while let Some((old, parent)) = stack.pop() {
            new_id[old as usize] = order.len() as u32;
            order.push(old);
            parent_of.push(parent);
            let me = new_id[old as usize];
            let kids = &nodes[old as usize].as_ref().expect("node visited twice").children;
            for &c in kids.iter().rev() {
                stack.push((c, me));
            }
        }
        for &old in &order {
            let raw = nodes[old as usize].take().unwrap();
            tree.kinds.push(raw.kind);
            tree.spans.push(raw.span);
            tree.flags.push(raw.flags);
            tree.child_start.push(tree.children.len() as u32);
            tree.children.extend(raw.children.iter().map(|&c| new_id[c as usize]));
            tree.attrs.push(raw.attr);
        }
        tree.child_start.push(tree.children.len() as u32);
        tree.parents = parent_of;
        tree
    }

    fn node_from_json(&mut self, value: &Value, path: &str) -> Result<NodeId, String> {
        let obj = value
            .as_object()
            .ok_or_else(|| format!("{path}: expected object"))?;
        let kind_name = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("{path}.kind: missing"))?;
        let kind = NodeKind::from_name(kind_name)
            .ok_or_else(|| format!("{path}.kind: unknown node kind {kind_name:?}"))?;
        let mut children = Vec::new();
        if let Some(list) = obj.get("children") {
            let list = list
                .as_array()
                .ok_or_else(|| format!("{path}.children: expected array"))?;
            for (i, c) in list.iter().enumerate() {
                children.push(self.node_from_json(c, &format!("{path}.children[{i}]"))?);
            }
        }
        let id = self.push(kind, Span::default(), children);
        if let Some(text) = obj.get("text").and_then(Value::as_str) {
            self.set_attr(id, text);
        }
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_renumbers_into_preorder() {
        let mut b = TreeBuilder::default();
        let x = b.push(NodeKind::Identifier, Span::new(0, 1), vec![]);
        b.set_attr(x, "x");
        let one = b.push(NodeKind::NumericLiteral, Span::new(4, 5), vec![]);
        let assign = b.push(NodeKind::AssignmentExpression, Span::new(0, 5), vec![x, one]);
        let stmt = b.push(NodeKind::ExpressionStatement, Span::new(0, 6), vec![assign]);
        let prog = b.push(NodeKind::Program, Span::new(0, 6), vec![stmt]);
        let t = b.finish(prog);
        assert_eq!(
            t.kinds_preorder(),
            &[
                NodeKind::Program,
                NodeKind::ExpressionStatement,
                NodeKind::AssignmentExpression,
                NodeKind::Identifier,
                NodeKind::NumericLiteral
            ]
        );
        assert_eq!(t.children(2), &[3, 4]);
        assert_eq!(t.parent(3), Some(2));
        assert_eq!(t.attr(3), Some("x"));
        assert_eq!(t.subtree_end(1), 5);
        assert_eq!(
            t.subtree_sexp(2),
            "(AssignmentExpression(Identifier)(NumericLiteral))"
        );
        let back = SyntaxTree::from_json(&t.to_json()).unwrap();
        assert_eq!(back.kinds_preorder(), t.kinds_preorder());
        assert_eq!(back.attr(3), Some("x"));
    }

    #[test]
    fn kind_names_round_trip() {
        for &k in NodeKind::ALL {
            assert_eq!(NodeKind::from_name(k.as_str()), Some(k));
        }
        assert_eq!(NodeKind::NullLiteral.estree_name(), "Literal");
    }
}
