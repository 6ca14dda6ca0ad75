#include <stdio.h>
#include <string.h>
#include "ndfwm.h"

#define CHECK(call)                                                            \
  do {                                                                         \
    NdfwmStatus s_ = (call);                                                   \
    if (s_ != NDFWM_STATUS_OK) {                                               \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,                        \
              ndfwm_last_error_message());                                     \
      return 1;                                                                \
    }                                                                          \
  } while (0)

int main(void) {
  NdfwmModel *model = NULL;
  CHECK(ndfwm_model_new(3.0, 6.0, 6.0, 3.0, &model));
  CHECK(ndfwm_model_set_fields(model, 1.0, 1.0, 1.0, 50.0, 8.055, 0.004));

  NdfwmSpectrum *spectrum = NULL;
  CHECK(ndfwm_spectrum_stationary(model, -150.0, 150.0, 601, &spectrum));
  if (ndfwm_spectrum_len(spectrum) != 601) return 2;

  double delta, re, im, intensity;
  CHECK(ndfwm_spectrum_get(spectrum, 300, &delta, &re, &im, &intensity));
  if (delta != 0.0 || intensity <= 0.0) return 3;

  double a_re, a_im;
  CHECK(ndfwm_amplitude(model, 0.0, 0.0, 0.0, &a_re, &a_im));
  if (a_re != re || a_im != im) return 4;

  if (ndfwm_spectrum_get(spectrum, 601, NULL, NULL, NULL, NULL) !=
      NDFWM_STATUS_INDEX_OUT_OF_RANGE)
    return 5;
  if (strlen(ndfwm_last_error_message()) == 0) return 6;

  NdfwmModel *bad = NULL;
  if (ndfwm_model_new(3.0, 3.0, 6.0, 3.0, &bad) != NDFWM_STATUS_DEGENERATE_RATES)
    return 7;

  ndfwm_spectrum_free(spectrum);
  ndfwm_model_free(model);
  printf("ok %s\n", ndfwm_version());
  return 0;
}
