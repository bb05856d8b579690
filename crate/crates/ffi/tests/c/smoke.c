#include <math.h>
#include <stdio.h>
#include <string.h>

#include "atomlab.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      const char *m = atomlab_last_error_message();                     \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,    \
              m ? m : "no message");                                    \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  AtomlabFunction *f = NULL;
  CHECK(atomlab_function_new_atom("1.0,2.0:0.5,0.25", NULL, NULL, 1.0, &f) ==
        ATOMLAB_STATUS_OK);

  size_t dim = 0, terms = 0;
  CHECK(atomlab_function_shape(f, &dim, &terms) == ATOMLAB_STATUS_OK);
  CHECK(dim == 2 && terms == 1);

  double point[2] = {0.8, 1.9}, v = 0.0;
  CHECK(atomlab_function_eval(f, point, 2, &v) == ATOMLAB_STATUS_OK);
  CHECK(fabs(fabs(v) - 1.0 / (1.0 * 0.5)) < 1e-12);

  AtomlabProvider *p = NULL;
  CHECK(atomlab_provider_new(f, NULL, &p) == ATOMLAB_STATUS_OK);
  double z[4] = {0.3, 0.1, -0.2, 0.4}, re, im, grad[4];
  CHECK(atomlab_provider_value(p, z, 4, &re, &im) == ATOMLAB_STATUS_OK);
  CHECK(atomlab_provider_gradient(p, z, 4, grad, 4) == ATOMLAB_STATUS_OK);
  CHECK(isfinite(re) && isfinite(grad[3]));

  double outside[4] = {1.0, 0.0, 0.0, 0.0};
  CHECK(atomlab_provider_value(p, outside, 4, &re, &im) ==
        ATOMLAB_STATUS_DOMAIN);
  CHECK(atomlab_last_error_message() != NULL);

  char *json = NULL;
  CHECK(atomlab_function_to_json(f, &json) == ATOMLAB_STATUS_OK);
  AtomlabFunction *g = NULL;
  CHECK(atomlab_function_from_json(json, &g) == ATOMLAB_STATUS_OK);
  atomlab_string_free(json);

  CHECK(atomlab_function_new_atom("1.0:abc", NULL, NULL, 1.0, &g) ==
        ATOMLAB_STATUS_PARSE);

  atomlab_provider_free(p);
  atomlab_function_free(f);
  atomlab_function_free(g);
  printf("ok %s\n", atomlab_version());
  return 0;
}
