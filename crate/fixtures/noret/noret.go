// Package noret holds a request context whose String method writes a
// response body and returns nothing.
package noret

import "fmt"

// Context carries the response state of a single request.
// FIXTURE-DOC Context
type Context struct {
	Status int
	Body   string
}

// NewContext returns an empty Context.
// FIXTURE-DOC NewContext
func NewContext() *Context {
	return &Context{}
}

// String writes the formatted body with the given status code.
// It does not return a value.
// FIXTURE-DOC String
func (c *Context) String(code int, format string, values ...any) {
	c.Status = code
	c.Body = fmt.Sprintf(format, values...)
}
