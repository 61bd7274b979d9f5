#!/usr/bin/env node
// Emits one JSON line per file with the reference token-kind and
// preorder node-kind sequences, as produced by acorn (ES2020, module).
//
// usage: estree_dump.js --root DIR [--count N] [--max-bytes B]
//        estree_dump.js FILE...
// With --include-rejected, files acorn rejects are emitted (ok=false)
// and count towards N.

const fs = require("fs");
const path = require("path");
const crypto = require("crypto");
const acorn = require("acorn");

const KEYWORDS = new Set([
  "await", "break", "case", "catch", "class", "const", "continue", "debugger",
  "default", "delete", "do", "else", "enum", "export", "extends", "false",
  "finally", "for", "function", "if", "implements", "import", "in",
  "instanceof", "interface", "let", "new", "null", "package", "private",
  "protected", "public", "return", "static", "super", "switch", "this",
  "throw", "true", "try", "typeof", "var", "void", "while", "with", "yield",
]);

const SKIP_KEYS = new Set(["type", "start", "end", "loc", "range"]);

function parse(source) {
  const tokens = [];
  const ast = acorn.parse(source, {
    ecmaVersion: 2020,
    sourceType: "module",
    allowHashBang: true,
    onToken: tokens,
  });
  return { ast, tokens };
}

function tokenKinds(tokens) {
  const out = [];
  for (let i = 0; i < tokens.length; i++) {
    const t = tokens[i];
    const label = t.type.label;
    if (label === "eof" || label === "`" || label === "${") continue;
    if (label === "}" && i + 1 < tokens.length && tokens[i + 1].type.label === "template") continue;
    if (label === "template") out.push("T");
    else if (t.type.keyword) out.push("K");
    else if (label === "name") out.push(KEYWORDS.has(t.value) ? "K" : "I");
    else if (label === "num") out.push(typeof t.value === "bigint" ? "B" : "N");
    else if (label === "string") out.push("S");
    else if (label === "regexp") out.push("R");
    else out.push("P");
  }
  return out.join("");
}

function nodeKinds(root) {
  const out = [];
  const visit = (node) => {
    out.push(node.type);
    const kids = [];
    for (const key of Object.keys(node)) {
      if (SKIP_KEYS.has(key)) continue;
      const v = node[key];
      if (Array.isArray(v)) {
        for (const x of v) if (x && typeof x.type === "string") kids.push(x);
      } else if (v && typeof v === "object" && typeof v.type === "string") {
        kids.push(v);
      }
    }
    // Stable sort keeps field order for nodes sharing a start offset.
    kids.sort((a, b) => a.start - b.start);
    for (const k of kids) visit(k);
  };
  visit(root);
  return out.join(" ");
}

function dump(file) {
  const source = fs.readFileSync(file, "utf8");
  try {
    const { ast, tokens } = parse(source);
    return { path: file, ok: true, tokens: tokenKinds(tokens), nodes: nodeKinds(ast) };
  } catch (e) {
    return { path: file, ok: false, error: String(e.message) };
  }
}

function walk(dir, out) {
  let entries;
  try {
    entries = fs.readdirSync(dir, { withFileTypes: true });
  } catch {
    return;
  }
  entries.sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0));
  for (const e of entries) {
    const p = path.join(dir, e.name);
    if (e.isDirectory()) walk(p, out);
    else if (e.isFile() && /\.(m?js)$/.test(e.name)) out.push(p);
  }
}

function main() {
  const args = process.argv.slice(2);
  const opt = { root: null, count: 1000, maxBytes: 65536, files: [], includeRejected: false };
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--root") opt.root = args[++i];
    else if (args[i] === "--count") opt.count = Number(args[++i]);
    else if (args[i] === "--max-bytes") opt.maxBytes = Number(args[++i]);
    else if (args[i] === "--include-rejected") opt.includeRejected = true;
    else opt.files.push(args[i]);
  }
  const write = (rec) => process.stdout.write(JSON.stringify(rec) + "\n");
  if (!opt.root) {
    for (const f of opt.files) write(dump(f));
    return;
  }
  const files = [];
  walk(opt.root, files);
  // Deterministic order independent of directory layout.
  const keyed = files
    .filter((f) => {
      const size = fs.statSync(f).size;
      return size > 0 && size <= opt.maxBytes;
    })
    .map((f) => [crypto.createHash("sha256").update(path.relative(opt.root, f)).digest("hex"), f]);
  keyed.sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));
  let accepted = 0;
  for (const [, f] of keyed) {
    if (accepted >= opt.count) break;
    const rec = dump(f);
    if (rec.ok || opt.includeRejected) {
      accepted++;
      write(rec);
    }
  }
}

main();
