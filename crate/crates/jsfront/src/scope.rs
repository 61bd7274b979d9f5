//! Lexical scope analysis over a [`SyntaxTree`].
//!
//! Every `Identifier` node is classified as a declaration, a reference
//! (resolved to a binding or left unresolved), or a plain name such as a
//! property key or label.

use std::collections::{BTreeSet, HashMap};

use crate::ast::{flags, NodeId, NodeKind, SyntaxTree};

pub type ScopeId = u32;
pub type BindingId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScopeKind {
    Module,
    Function,
    Block,
    For,
    Switch,
    Catch,
    /// Holds the name of a named function or class expression.
    Name,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindingKind {
    Var,
    Let,
    Const,
    Param,
    Function,
    Class,
    CatchParam,
    Import,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Not an identifier.
    None,
    Decl(BindingId),
    /// Reference; `None` when the name is unresolved (a global).
    Ref(Option<BindingId>),
    /// Property key, label, import/export external name, meta property.
    Name,
}

#[derive(Clone, Debug)]
pub struct Scope {
    pub kind: ScopeKind,
    pub parent: Option<ScopeId>,
    pub node: NodeId,
    /// Bindings in declaration order.
    pub bindings: Vec<BindingId>,
    names: HashMap<String, BindingId>,
}

#[derive(Clone, Debug)]
pub struct Binding {
    pub name: String,
    pub kind: BindingKind,
    pub scope: ScopeId,
    /// Declaring identifier nodes, first one first.
    pub decls: Vec<NodeId>,
    pub refs: Vec<NodeId>,
    pub exported: bool,
}

#[derive(Clone, Debug)]
pub struct ScopeInfo {
    /// Scopes in preorder of their nodes; scope 0 is the module scope.
    pub scopes: Vec<Scope>,
    pub bindings: Vec<Binding>,
    /// Indexed by node id.
    pub roles: Vec<Role>,
    /// Names referenced but not declared anywhere in scope.
    pub unresolved: BTreeSet<String>,
}

impl ScopeInfo {
    pub fn role(&self, id: NodeId) -> Role {
        self.roles[id as usize]
    }

    pub fn binding_of(&self, id: NodeId) -> Option<BindingId> {
        match self.role(id) {
            Role::Decl(b) | Role::Ref(Some(b)) => Some(b),
            _ => None,
        }
    }

    /// True when direct `eval` may observe local names.
    pub fn uses_eval(&self) -> bool {
        self.unresolved.contains("eval")
    }
}

struct Analyzer<'t> {
    tree: &'t SyntaxTree,
    scopes: Vec<Scope>,
    bindings: Vec<Binding>,
    roles: Vec<Role>,
    pending_refs: Vec<(NodeId, ScopeId)>,
    pending_exports: Vec<(NodeId, ScopeId)>,
}

/// Runs scope analysis on a parsed module.
pub fn analyze(tree: &SyntaxTree) -> ScopeInfo {
    let mut a = Analyzer {
        tree,
        scopes: Vec::new(),
        bindings: Vec::new(),
        roles: vec![Role::None; tree.len()],
        pending_refs: Vec::new(),
        pending_exports: Vec::new(),
    };
    let root = tree.root();
    let module = a.new_scope(ScopeKind::Module, None, root);
    for &c in tree.children(root) {
        a.visit(c, module);
    }
    a.resolve()
}

impl<'t> Analyzer<'t> {
    fn new_scope(&mut self, kind: ScopeKind, parent: Option<ScopeId>, node: NodeId) -> ScopeId {
        let id = self.scopes.len() as ScopeId;
        self.scopes.push(Scope {
            kind,
            parent,
            node,
            bindings: Vec::new(),
            names: HashMap::new(),
        });
        id
    }

    fn function_scope(&self, mut scope: ScopeId) -> ScopeId {
        loop {
            let s = &self.scopes[scope as usize];
            match (s.kind, s.parent) {
                (ScopeKind::Function | ScopeKind::Module, _) | (_, None) => return scope,
                (_, Some(p)) => scope = p,
            }
        }
    }

    fn declare(&mut self, ident: NodeId, scope: ScopeId, kind: BindingKind) -> BindingId {
        let name = self.tree.attr(ident).unwrap_or_default().to_string();
        let id = match self.scopes[scope as usize].names.get(&name) {
            Some(&b) => {
                self.bindings[b as usize].decls.push(ident);
                b
            }
            None => {
                let b = self.bindings.len() as BindingId;
                self.bindings.push(Binding {
                    name: name.clone(),
                    kind,
                    scope,
                    decls: vec![ident],
                    refs: Vec::new(),
                    exported: false,
                });
                let s = &mut self.scopes[scope as usize];
                s.names.insert(name, b);
                s.bindings.push(b);
                b
            }
        };
        self.roles[ident as usize] = Role::Decl(id);
        id
    }

    fn reference(&mut self, ident: NodeId, scope: ScopeId) {
        self.pending_refs.push((ident, scope));
    }

    fn name(&mut self, ident: NodeId) {
        self.roles[ident as usize] = Role::Name;
    }

    /// Declares the identifiers bound by a pattern; default values and
    /// computed keys are visited as expressions in `expr_scope`.
    fn declare_pattern(&mut self, node: NodeId, target: ScopeId, expr_scope: ScopeId, kind: BindingKind) -> Vec<BindingId> {
        let mut out = Vec::new();
        self.declare_pattern_into(node, target, expr_scope, kind, &mut out);
        out
    }

    fn declare_pattern_into(&mut self, node: NodeId, target: ScopeId, expr_scope: ScopeId, kind: BindingKind, out: &mut Vec<BindingId>) {
        let t = self.tree;
        match t.kind(node) {
            NodeKind::Identifier => out.push(self.declare(node, target, kind)),
            NodeKind::ObjectPattern => {
                for &p in t.children(node) {
                    match t.kind(p) {
                        NodeKind::Property => {
                            let [key, value] = [t.children(p)[0], t.children(p)[1]];
                            if t.has_flag(p, flags::COMPUTED) {
                                self.visit(key, expr_scope);
                            } else if t.kind(key) == NodeKind::Identifier {
                                self.name(key);
                            }
                            self.declare_pattern_into(value, target, expr_scope, kind, out);
                        }
                        _ => self.declare_pattern_into(p, target, expr_scope, kind, out),
                    }
                }
            }
            NodeKind::ArrayPattern | NodeKind::RestElement => {
                for &c in t.children(node) {
                    self.declare_pattern_into(c, target, expr_scope, kind, out);
                }
            }
            NodeKind::AssignmentPattern => {
                let [left, right] = [t.children(node)[0], t.children(node)[1]];
                self.declare_pattern_into(left, target, expr_scope, kind, out);
                self.visit(right, expr_scope);
            }
            _ => self.visit(node, expr_scope),
        }
    }

    fn visit_children(&mut self, node: NodeId, scope: ScopeId) {
        for &c in self.tree.children(node) {
            self.visit(c, scope);
        }
    }

    fn visit_function(&mut self, node: NodeId, scope: ScopeId) {
        let t = self.tree;
        let kids = t.children(node);
        let mut rest = kids;
        let mut outer = scope;
        match t.kind(node) {
            NodeKind::FunctionDeclaration => {
                if t.kind(kids[0]) == NodeKind::Identifier {
                    self.declare(kids[0], scope, BindingKind::Function);
                    rest = &kids[1..];
                }
            }
            NodeKind::FunctionExpression => {
                if t.kind(kids[0]) == NodeKind::Identifier {
                    outer = self.new_scope(ScopeKind::Name, Some(scope), node);
                    self.declare(kids[0], outer, BindingKind::Function);
                    rest = &kids[1..];
                }
            }
            _ => {}
        }
        let fscope = self.new_scope(ScopeKind::Function, Some(outer), node);
        let (body, params) = rest.split_last().expect("function has a body");
        for &p in params {
            self.declare_pattern(p, fscope, fscope, BindingKind::Param);
        }
        if t.kind(*body) == NodeKind::BlockStatement {
            self.visit_children(*body, fscope);
        } else {
            self.visit(*body, fscope);
        }
    }

    fn visit_class(&mut self, node: NodeId, scope: ScopeId) {
        let t = self.tree;
        let kids = t.children(node);
        let mut inner = scope;
        let mut rest = kids;
        if t.kind(kids[0]) == NodeKind::Identifier {
            if t.kind(node) == NodeKind::ClassDeclaration {
                self.declare(kids[0], scope, BindingKind::Class);
            } else {
                inner = self.new_scope(ScopeKind::Name, Some(scope), node);
                self.declare(kids[0], inner, BindingKind::Class);
            }
            rest = &kids[1..];
        }
        for &c in rest {
            self.visit(c, inner);
        }
    }

    fn visit_var_declaration(&mut self, node: NodeId, scope: ScopeId) -> Vec<BindingId> {
        let t = self.tree;
        let (kind, target) = match t.attr(node) {
            Some("var") => (BindingKind::Var, self.function_scope(scope)),
            Some("const") => (BindingKind::Const, scope),
            _ => (BindingKind::Let, scope),
        };
        let mut declared = Vec::new();
        for &d in t.children(node) {
            let kids = t.children(d);
            declared.extend(self.declare_pattern(kids[0], target, scope, kind));
            if let Some(&init) = kids.get(1) {
                self.visit(init, scope);
            }
        }
        declared
    }

    fn visit(&mut self, node: NodeId, scope: ScopeId) {
        let t = self.tree;
        let kids = t.children(node);
        match t.kind(node) {
            NodeKind::Identifier => self.reference(node, scope),
            NodeKind::VariableDeclaration => {
                self.visit_var_declaration(node, scope);
            }
            NodeKind::FunctionDeclaration | NodeKind::FunctionExpression | NodeKind::ArrowFunctionExpression => {
                self.visit_function(node, scope)
            }
            NodeKind::ClassDeclaration | NodeKind::ClassExpression => self.visit_class(node, scope),
            NodeKind::BlockStatement => {
                let s = self.new_scope(ScopeKind::Block, Some(scope), node);
                self.visit_children(node, s);
            }
            NodeKind::ForStatement | NodeKind::ForInStatement | NodeKind::ForOfStatement => {
                let s = self.new_scope(ScopeKind::For, Some(scope), node);
                for &c in kids {
                    if t.kind(c) == NodeKind::VariableDeclaration {
                        self.visit_var_declaration(c, s);
                    } else {
                        self.visit(c, s);
                    }
                }
            }
            NodeKind::SwitchStatement => {
                self.visit(kids[0], scope);
                let s = self.new_scope(ScopeKind::Switch, Some(scope), node);
                for &c in &kids[1..] {
                    self.visit_children(c, s);
                }
            }
            NodeKind::CatchClause => {
                let s = self.new_scope(ScopeKind::Catch, Some(scope), node);
                let (body, param) = kids.split_last().unwrap();
                if let Some(&p) = param.first() {
                    self.declare_pattern(p, s, s, BindingKind::CatchParam);
                }
                self.visit_children(*body, s);
            }
            NodeKind::MemberExpression => {
                self.visit(kids[0], scope);
                if t.has_flag(node, flags::COMPUTED) {
                    self.visit(kids[1], scope);
                } else {
                    self.name(kids[1]);
                }
            }
            NodeKind::Property | NodeKind::MethodDefinition => {
                if t.has_flag(node, flags::COMPUTED) {
                    self.visit(kids[0], scope);
                } else if t.kind(kids[0]) == NodeKind::Identifier {
                    self.name(kids[0]);
                }
                self.visit(kids[1], scope);
            }
            NodeKind::LabeledStatement => {
                self.name(kids[0]);
                self.visit(kids[1], scope);
            }
            NodeKind::BreakStatement | NodeKind::ContinueStatement | NodeKind::MetaProperty => {
                for &c in kids {
                    self.name(c);
                }
            }
            NodeKind::ImportDeclaration => {
                for &spec in kids {
                    match t.kind(spec) {
                        NodeKind::ImportSpecifier => {
                            let sk = t.children(spec);
                            self.name(sk[0]);
                            self.declare(sk[1], scope, BindingKind::Import);
                        }
                        NodeKind::ImportDefaultSpecifier | NodeKind::ImportNamespaceSpecifier => {
                            self.declare(t.children(spec)[0], scope, BindingKind::Import);
                        }
                        _ => {}
                    }
                }
            }
            NodeKind::ExportNamedDeclaration => {
                let has_source = kids.last().is_some_and(|&c| t.kind(c) == NodeKind::StringLiteral);
                for &c in kids {
                    match t.kind(c) {
                        NodeKind::ExportSpecifier => {
                            let sk = t.children(c);
                            if has_source {
                                self.name(sk[0]);
                            } else {
                                self.reference(sk[0], scope);
                                self.pending_exports.push((sk[0], scope));
                            }
                            self.name(sk[1]);
                        }
                        NodeKind::VariableDeclaration => {
                            for b in self.visit_var_declaration(c, scope) {
                                self.bindings[b as usize].exported = true;
                            }
                        }
                        NodeKind::FunctionDeclaration | NodeKind::ClassDeclaration => {
                            self.visit(c, scope);
                            let name = t.children(c)[0];
                            if let Role::Decl(b) = self.roles[name as usize] {
                                self.bindings[b as usize].exported = true;
                            }
                        }
                        _ => self.visit(c, scope),
                    }
                }
            }
            NodeKind::ExportDefaultDeclaration => {
                let c = kids[0];
                self.visit(c, scope);
                if matches!(t.kind(c), NodeKind::FunctionDeclaration | NodeKind::ClassDeclaration) {
                    if let Role::Decl(b) = self.roles[t.children(c)[0] as usize] {
                        self.bindings[b as usize].exported = true;
                    }
                }
            }
            NodeKind::ExportAllDeclaration => {
                for &c in kids {
                    if t.kind(c) == NodeKind::Identifier {
                        self.name(c);
                    }
                }
            }
            _ => self.visit_children(node, scope),
        }
    }

    fn lookup(&self, name: &str, mut scope: ScopeId) -> Option<BindingId> {
        loop {
            let s = &self.scopes[scope as usize];
            if let Some(&b) = s.names.get(name) {
                return Some(b);
            }
            scope = s.parent?;
        }
    }

    fn resolve(mut self) -> ScopeInfo {
        let mut unresolved = BTreeSet::new();
        for (ident, scope) in std::mem::take(&mut self.pending_refs) {
            let name = self.tree.attr(ident).unwrap_or_default();
            let b = self.lookup(name, scope);
            match b {
                Some(b) => self.bindings[b as usize].refs.push(ident),
                None => {
                    unresolved.insert(name.to_string());
                }
            }
            self.roles[ident as usize] = Role::Ref(b);
        }
        for (ident, _) in std::mem::take(&mut self.pending_exports) {
            if let Role::Ref(Some(b)) = self.roles[ident as usize] {
                self.bindings[b as usize].exported = true;
            }
        }
        ScopeInfo {
            scopes: self.scopes,
            bindings: self.bindings,
            roles: self.roles,
            unresolved,
        }
    }
}
