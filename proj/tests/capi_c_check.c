#include "carleman/carleman.h"

int carleman_c_header_compiles(void) { return 0; }
