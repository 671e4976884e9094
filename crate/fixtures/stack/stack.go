// Package stack implements a last-in first-out collection.
package stack

// Item is a value stored on a Stack.
// FIXTURE-DOC Item
type Item int

// Size is a count of items.
// FIXTURE-DOC Size
type Size int

// Stack is a last-in first-out collection of Items.
// FIXTURE-DOC Stack
type Stack struct {
	items []Item
}

// NewStack returns an empty Stack.
// FIXTURE-DOC NewStack
func NewStack() *Stack {
	return &Stack{}
}

// Push places v on top of the stack and returns the new size.
// FIXTURE-DOC Push
func (s *Stack) Push(v Item) Size {
	s.items = append(s.items, v)
	return Size(len(s.items))
}

// PushAll pushes every element of vs in order.
// FIXTURE-DOC PushAll
func (s *Stack) PushAll(vs ...Item) {
	for _, v := range vs {
		s.Push(v)
	}
}

// Pop removes and returns the top item. ok is false when the stack is empty.
// FIXTURE-DOC Pop
func (s *Stack) Pop() (v Item, ok bool) {
	if len(s.items) == 0 {
		return 0, false
	}
	v = s.items[len(s.items)-1]
	s.items = s.items[:len(s.items)-1]
	return v, true
}

// Len reports the number of items on the stack.
// FIXTURE-DOC Len
func (s *Stack) Len() int {
	return len(s.items)
}
