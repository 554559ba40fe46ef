#include <stdio.h>
#include <stdlib.h>

void auth_header(char *out, size_t n) {
    const char *key = getenv("SERVICE_API_KEY");
    snprintf(out, n, "Authorization: Bearer %s", key ? key : "");
}
