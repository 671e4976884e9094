// Package loops holds small branchy functions used as mutation targets.
package loops

// SumTo returns 1 + 2 + ... + n, or 0 when n is not positive.
// FIXTURE-DOC SumTo
func SumTo(n int) int {
	if n <= 0 {
		return 0
	}
	return n * (n + 1) / 2
}

// Classify labels n as "negative", "zero" or "positive".
// FIXTURE-DOC Classify
func Classify(n int) string {
	if n < 0 {
		return "negative"
	}
	if n == 0 {
		return "zero"
	}
	return "positive"
}

// CountAbove counts the elements of xs that are greater than limit.
// FIXTURE-DOC CountAbove
func CountAbove(xs []int, limit int) int {
	count := 0
	for _, x := range xs {
		if x > limit {
			count++
		}
	}
	return count
}

// AllEven reports whether every element of xs is even.
// FIXTURE-DOC AllEven
func AllEven(xs []int) bool {
	for _, x := range xs {
		if x%2 != 0 {
			return false
		}
	}
	return true
}
