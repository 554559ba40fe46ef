#include <stdio.h>
#include <string.h>

#define NAME_LEN 32

/* Copy name into out (NAME_LEN bytes) and return out. */
char *store_name(char out[NAME_LEN], const char *name) {
