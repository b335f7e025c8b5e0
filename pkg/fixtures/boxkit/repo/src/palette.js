// Color table shared by every drawing helper.
const PALETTE = {
  backdrop: "#f8f8f8",
  accent: "#cc2222",
  outline: "#222222",
};
