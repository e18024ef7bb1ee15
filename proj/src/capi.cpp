#include "carleman/carleman.h"

// Real implementation lands with the full module set; placeholder keeps the
// shared library linking during bring-up.
extern "C" {
const char* clm_last_error(void) { return ""; }
void clm_string_free(char*) {}
}
