/* Builds against the public header as plain C and exercises one full path. */
#include <math.h>
#include <stdio.h>

#include "mistore/mistore.h"

static int failures = 0;

#define EXPECT(cond)                                               \
  do {                                                             \
    if (!(cond)) {                                                 \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                  \
    }                                                              \
  } while (0)

int main(void) {
  const double a[] = {0.5};
  const int taus[] = {1, 2, 5};
  mistore_model* model = NULL;
  mistore_profile* profile = NULL;
  mistore_scale_entry entry;
  double x[512];
  mistore_fit_config cfg;
  mistore_fit* fit = NULL;
  mistore_fit_summary summary;

  EXPECT(mistore_model_from_ar(a, 1, 0.0, 1.0, &model) == MISTORE_OK);
  EXPECT(mistore_profile_compute(model, 50, 48, taus, 3, &profile) == MISTORE_OK);
  EXPECT(mistore_profile_size(profile) == 3);
  EXPECT(mistore_profile_entry(profile, 0, &entry) == MISTORE_OK);
  EXPECT(fabs(entry.storage - 0.5 * log(4.0 / 3.0)) < 1e-12);
  EXPECT(mistore_profile_entry(profile, 1, &entry) == MISTORE_OK);
  EXPECT(entry.tau == 2 && entry.storage > 0.0);

  EXPECT(mistore_simulate(model, 50, 512, 1, 0, -1, x) == MISTORE_OK);
  mistore_fit_config_default(&cfg);
  cfg.mode = MISTORE_FIT_EAR;
  EXPECT(mistore_fit_series(x, 512, &cfg, &fit) == MISTORE_OK);
  EXPECT(mistore_fit_get_summary(fit, &summary) == MISTORE_OK);
  EXPECT(summary.p_selected >= 2 && summary.p_selected <= 16);

  EXPECT(mistore_fit_series(x, 10, &cfg, NULL) == MISTORE_E_USAGE);
  EXPECT(mistore_last_error()[0] != '\0');

  mistore_fit_free(fit);
  mistore_profile_free(profile);
  mistore_model_free(model);
  if (failures == 0) printf("C API smoke test passed (library %s)\n", mistore_version());
  return failures == 0 ? 0 : 1;
}
