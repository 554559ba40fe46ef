#include <stdio.h>
#include <string.h>

/* Write "Hello, <first> <last>!" into buf, which holds size bytes. */
void greet(char *buf, size_t size, const char *first, const char *last) {
