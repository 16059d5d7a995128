// Embeds 80 phantoms, places 10 unseen ones by Nystrom extension and classifies them with LDA.

#include <iostream>

#include "dmap/dmap.hpp"

int main() {
  const dmap::Shape shape{1, 16, 16, 1};
  const dmap::Dataset train = dmap::standardize_all(dmap::generate_phantoms(40, shape, 0.3, 1));
  const dmap::Dataset fresh = dmap::standardize_all(dmap::generate_phantoms(5, shape, 0.3, 2));

  const dmap::TrainedSpace space = dmap::train_space(train, {8.0, 1}, 20);
  std::cout << "leading eigenvalues:";
  for (int l = 0; l < 5; ++l) std::cout << ' ' << space.basis.eigenvalues[l];
  std::cout << '\n';

  const dmap::LdaModel lda = dmap::lda_fit(space.coords, train.labels());
  const dmap::Prediction pred = dmap::lda_predict(lda, dmap::batch_extend(space, fresh));
  for (std::size_t i = 0; i < fresh.size(); ++i)
    std::cout << fresh[i].id << " true " << *fresh[i].label << " predicted " << pred.labels[i] << " score "
              << pred.scores[i] << '\n';
}
