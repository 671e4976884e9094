// Command golsp-lite is a small Go language server that answers
// textDocument/definition and textDocument/hover over stdio, using only the
// standard library's parser and type checker. It implements the subset of
// the protocol the test generator's fetcher needs and is used in place of
// gopls where gopls is not installed.
package main

import (
	"bufio"
	"encoding/json"
	"fmt"
	"go/ast"
	"go/importer"
	"go/parser"
	"go/token"
	"go/types"
	"io"
	"net/url"
	"os"
	"path/filepath"
	"sort"
	"strconv"
	"strings"
	"unicode/utf8"
)

type request struct {
	ID     *json.RawMessage `json:"id,omitempty"`
	Method string           `json:"method"`
	Params json.RawMessage  `json:"params,omitempty"`
}

type position struct {
	Line      int `json:"line"`
	Character int `json:"character"`
}

type rng struct {
	Start position `json:"start"`
	End   position `json:"end"`
}

type location struct {
	URI   string `json:"uri"`
	Range rng    `json:"range"`
}

type textDocumentPositionParams struct {
	TextDocument struct {
		URI string `json:"uri"`
	} `json:"textDocument"`
	Position position `json:"position"`
}

type server struct {
	out      *bufio.Writer
	overlays map[string]string
	fset     *token.FileSet
	imp      types.Importer
	shutdown bool
}

func main() {
	fset := token.NewFileSet()
	s := &server{
		out:      bufio.NewWriter(os.Stdout),
		overlays: map[string]string{},
		fset:     fset,
		imp:      importer.ForCompiler(fset, "source", nil),
	}
	in := bufio.NewReader(os.Stdin)
	for {
		body, err := readMessage(in)
		if err != nil {
			if err == io.EOF {
				os.Exit(0)
			}
			fmt.Fprintln(os.Stderr, "golsp-lite:", err)
			os.Exit(1)
		}
		var req request
		if err := json.Unmarshal(body, &req); err != nil {
			fmt.Fprintln(os.Stderr, "golsp-lite: bad message:", err)
			continue
		}
		s.handle(&req)
	}
}

func readMessage(r *bufio.Reader) ([]byte, error) {
	length := -1
	for {
		line, err := r.ReadString('\n')
		if err != nil {
			return nil, err
		}
		line = strings.TrimRight(line, "\r\n")
		if line == "" {
			break
		}
		name, value, ok := strings.Cut(line, ":")
		if ok && strings.EqualFold(strings.TrimSpace(name), "Content-Length") {
			n, err := strconv.Atoi(strings.TrimSpace(value))
			if err != nil {
				return nil, fmt.Errorf("bad Content-Length %q", value)
			}
			length = n
		}
	}
	if length < 0 {
		return nil, fmt.Errorf("missing Content-Length header")
	}
	body := make([]byte, length)
	_, err := io.ReadFull(r, body)
	return body, err
}

func (s *server) send(v any) {
	body, err := json.Marshal(v)
	if err != nil {
		panic(err)
	}
	fmt.Fprintf(s.out, "Content-Length: %d\r\n\r\n", len(body))
	s.out.Write(body)
	s.out.Flush()
}

func (s *server) reply(id *json.RawMessage, result any) {
	s.send(map[string]any{"jsonrpc": "2.0", "id": id, "result": result})
}

func (s *server) replyError(id *json.RawMessage, code int, msg string) {
	s.send(map[string]any{
		"jsonrpc": "2.0",
		"id":      id,
		"error":   map[string]any{"code": code, "message": msg},
	})
}

func (s *server) handle(req *request) {
	switch req.Method {
	case "initialize":
		s.reply(req.ID, map[string]any{
			"capabilities": map[string]any{
				"textDocumentSync":   1,
				"definitionProvider": true,
				"hoverProvider":      true,
			},
			"serverInfo": map[string]any{"name": "golsp-lite", "version": "0.1.0"},
		})
	case "initialized", "$/cancelRequest", "textDocument/didSave", "workspace/didChangeConfiguration":
	case "textDocument/didOpen":
		var p struct {
			TextDocument struct {
				URI  string `json:"uri"`
				Text string `json:"text"`
			} `json:"textDocument"`
		}
		if json.Unmarshal(req.Params, &p) == nil {
			s.overlays[uriToPath(p.TextDocument.URI)] = p.TextDocument.Text
		}
	case "textDocument/didChange":
		var p struct {
			TextDocument struct {
				URI string `json:"uri"`
			} `json:"textDocument"`
			ContentChanges []struct {
				Text string `json:"text"`
			} `json:"contentChanges"`
		}
		if json.Unmarshal(req.Params, &p) == nil && len(p.ContentChanges) > 0 {
			s.overlays[uriToPath(p.TextDocument.URI)] = p.ContentChanges[len(p.ContentChanges)-1].Text
		}
	case "textDocument/didClose":
		var p struct {
			TextDocument struct {
				URI string `json:"uri"`
			} `json:"textDocument"`
		}
		if json.Unmarshal(req.Params, &p) == nil {
			delete(s.overlays, uriToPath(p.TextDocument.URI))
		}
	case "textDocument/definition":
		var p textDocumentPositionParams
		if err := json.Unmarshal(req.Params, &p); err != nil {
			s.replyError(req.ID, -32602, err.Error())
			return
		}
		loc := s.definition(p)
		if loc == nil {
			s.reply(req.ID, nil)
		} else {
			s.reply(req.ID, []location{*loc})
		}
	case "textDocument/hover":
		var p textDocumentPositionParams
		if err := json.Unmarshal(req.Params, &p); err != nil {
			s.replyError(req.ID, -32602, err.Error())
			return
		}
		h := s.hover(p)
		if h == "" {
			s.reply(req.ID, nil)
		} else {
			s.reply(req.ID, map[string]any{
				"contents": map[string]any{"kind": "markdown", "value": h},
			})
		}
	case "shutdown":
		s.shutdown = true
		s.reply(req.ID, nil)
	case "exit":
		if s.shutdown {
			os.Exit(0)
		}
		os.Exit(1)
	default:
		if req.ID != nil {
			s.replyError(req.ID, -32601, "method not found: "+req.Method)
		}
	}
}

func uriToPath(uri string) string {
	u, err := url.Parse(uri)
	if err != nil || u.Scheme != "file" {
		return uri
	}
	return filepath.Clean(u.Path)
}

func pathToURI(path string) string {
	return (&url.URL{Scheme: "file", Path: path}).String()
}

func (s *server) readText(path string) (string, bool) {
	if text, ok := s.overlays[path]; ok {
		return text, true
	}
	data, err := os.ReadFile(path)
	if err != nil {
		return "", false
	}
	return string(data), true
}

// offsetOf converts a 0-based line and UTF-16 character into a byte offset.
func offsetOf(text string, pos position) int {
	off := 0
	for line := 0; line < pos.Line; line++ {
		i := strings.IndexByte(text[off:], '\n')
		if i < 0 {
			return len(text)
		}
		off += i + 1
	}
	units := 0
	for off < len(text) && text[off] != '\n' && units < pos.Character {
		r, size := utf8.DecodeRuneInString(text[off:])
		if r >= 0x10000 {
			units += 2
		} else {
			units++
		}
		off += size
	}
	return off
}

func positionOf(text string, offset int) position {
	if offset > len(text) {
		offset = len(text)
	}
	lineStart := strings.LastIndexByte(text[:offset], '\n') + 1
	line := strings.Count(text[:lineStart], "\n")
	units := 0
	for _, r := range text[lineStart:offset] {
		if r >= 0x10000 {
			units += 2
		} else {
			units++
		}
	}
	return position{Line: line, Character: units}
}

type checked struct {
	files map[string]*ast.File
	info  *types.Info
}

// check parses and type-checks the package that contains path. Files with
// syntax errors contribute whatever partial syntax tree the parser recovers.
func (s *server) check(path string) (*checked, error) {
	dir := filepath.Dir(path)
	focusText, ok := s.readText(path)
	if !ok {
		return nil, fmt.Errorf("cannot read %s", path)
	}
	focus := s.parse(path, focusText)
	if focus == nil || focus.Name == nil {
		return nil, fmt.Errorf("no package clause in %s", path)
	}
	pkgName := focus.Name.Name

	names := map[string]bool{path: true}
	if entries, err := os.ReadDir(dir); err == nil {
		for _, e := range entries {
			if !e.IsDir() && strings.HasSuffix(e.Name(), ".go") {
				names[filepath.Join(dir, e.Name())] = true
			}
		}
	}
	for p := range s.overlays {
		if filepath.Dir(p) == dir {
			names[p] = true
		}
	}
	sorted := make([]string, 0, len(names))
	for p := range names {
		sorted = append(sorted, p)
	}
	sort.Strings(sorted)

	c := &checked{files: map[string]*ast.File{}}
	var files []*ast.File
	for _, p := range sorted {
		var f *ast.File
		if p == path {
			f = focus
		} else {
			text, ok := s.readText(p)
			if !ok {
				continue
			}
			f = s.parse(p, text)
		}
		if f == nil || f.Name == nil || f.Name.Name != pkgName {
			continue
		}
		c.files[p] = f
		files = append(files, f)
	}
	c.info = &types.Info{
		Defs: map[*ast.Ident]types.Object{},
		Uses: map[*ast.Ident]types.Object{},
	}
	conf := types.Config{Importer: s.imp, Error: func(error) {}}
	conf.Check(pkgName, s.fset, files, c.info)
	return c, nil
}

func (s *server) parse(path, text string) *ast.File {
	f, err := parser.ParseFile(s.fset, path, text, parser.ParseComments|parser.AllErrors)
	if err != nil && f == nil {
		return nil
	}
	return f
}

func (s *server) objectAt(p textDocumentPositionParams) (*checked, types.Object) {
	path := uriToPath(p.TextDocument.URI)
	c, err := s.check(path)
	if err != nil {
		return nil, nil
	}
	f := c.files[path]
	if f == nil {
		return nil, nil
	}
	text, _ := s.readText(path)
	tf := s.fset.File(f.Pos())
	if tf == nil {
		return nil, nil
	}
	off := offsetOf(text, p.Position)
	if off > tf.Size() {
		return nil, nil
	}
	pos := tf.Pos(off)
	var found *ast.Ident
	ast.Inspect(f, func(n ast.Node) bool {
		if found != nil || n == nil {
			return false
		}
		if n.Pos() > pos || n.End() < pos {
			return false
		}
		if id, ok := n.(*ast.Ident); ok && id.Pos() <= pos && pos < id.End() {
			found = id
			return false
		}
		return true
	})
	if found == nil {
		return nil, nil
	}
	obj := c.info.Uses[found]
	if obj == nil {
		obj = c.info.Defs[found]
	}
	if obj == nil || !obj.Pos().IsValid() {
		return nil, nil
	}
	return c, obj
}

func (s *server) definition(p textDocumentPositionParams) *location {
	_, obj := s.objectAt(p)
	if obj == nil {
		return nil
	}
	if _, isPkg := obj.(*types.PkgName); isPkg {
		return nil
	}
	tpos := s.fset.Position(obj.Pos())
	text, ok := s.readText(tpos.Filename)
	if !ok {
		return nil
	}
	start := positionOf(text, tpos.Offset)
	end := positionOf(text, tpos.Offset+len(obj.Name()))
	return &location{URI: pathToURI(tpos.Filename), Range: rng{Start: start, End: end}}
}

func (s *server) hover(p textDocumentPositionParams) string {
	c, obj := s.objectAt(p)
	if obj == nil {
		return ""
	}
	qual := func(other *types.Package) string {
		if obj.Pkg() != nil && other == obj.Pkg() {
			return ""
		}
		return other.Name()
	}
	var b strings.Builder
	b.WriteString("```go\n")
	b.WriteString(types.ObjectString(obj, qual))
	b.WriteString("\n```")
	if doc := docFor(c, obj); doc != "" {
		b.WriteString("\n\n")
		b.WriteString(strings.TrimSpace(doc))
	}
	return b.String()
}

// docFor finds the documentation comment of a package-level object declared
// in one of the checked files.
func docFor(c *checked, obj types.Object) string {
	for _, f := range c.files {
		for _, d := range f.Decls {
			switch d := d.(type) {
			case *ast.FuncDecl:
				if d.Name.Pos() == obj.Pos() && d.Doc != nil {
					return d.Doc.Text()
				}
			case *ast.GenDecl:
				for _, spec := range d.Specs {
					var names []*ast.Ident
					var doc *ast.CommentGroup
					switch sp := spec.(type) {
					case *ast.TypeSpec:
						names, doc = []*ast.Ident{sp.Name}, sp.Doc
					case *ast.ValueSpec:
						names, doc = sp.Names, sp.Doc
					}
					for _, n := range names {
						if n.Pos() != obj.Pos() {
							continue
						}
						if doc == nil && len(d.Specs) == 1 {
							doc = d.Doc
						}
						if doc != nil {
							return doc.Text()
						}
						return ""
					}
				}
			}
		}
	}
	return ""
}
